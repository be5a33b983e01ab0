"""CH74 Bell expression for modulator settings and its optimization.

With the composed amplitudes ``C_ij`` of Alice's setting ``i`` and Bob's
setting ``j`` the normalized CH74 expression is

    S = J_0(C_00)^2 + J_0(C_01)^2 + J_0(C_10)^2 - J_0(C_11)^2.

The four ``C_ij`` are side lengths of a planar quadrilateral, so each is at
most the sum of the other three. The optimum lies on the face
``C_11 = C_00 + C_01 + C_10`` with the three short sides equal, which turns
the problem into a scalar maximization. :func:`optimize_brute_force` checks
that claim without using it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from freqbin.bessel import bessel_j
from freqbin.modulation import OFF, RfDrive, graf_compose

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# quantum bound for qubit pairs and the algebraic bound of the expression
DIM2_QUANTUM_MAX = 2.414
ALGEBRAIC_MAX = 3.0

LOCAL_BOUND = 2.0


def j0_squared(x: float) -> float:
    return bessel_j(0, x) ** 2


def j0_squared_slope(x: float) -> float:
    """Derivative of ``J_0(x)^2``, equal to ``-2 J_0(x) J_1(x)``."""
    return -2.0 * bessel_j(0, x) * bessel_j(1, x)


def bisect(func, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Root of ``func`` in ``[lo, hi]``; the endpoint values must differ in sign."""
    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_max(func, lo: float, hi: float, tol: float = 1e-6) -> tuple[float, float]:
    """Maximize a unimodal ``func`` on ``[lo, hi]``; returns ``(x, func(x))``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def j0_squared_level(level: float, tol: float = 1e-9) -> float:
    """Smallest ``x > 0`` with ``J_0(x)^2 = level``, for ``0 <= level < 1``."""
    return bisect(lambda x: j0_squared(x) - level, 0.0, first_j0_zero(tol), tol)


def first_j0_zero(tol: float = 1e-9) -> float:
    return bisect(lambda x: bessel_j(0, x), 2.0, 3.0, tol)


def second_j0_squared_maximum(tol: float = 1e-9) -> tuple[float, float]:
    """Location and value of the first maximum of ``J_0^2`` past ``x = 0``."""
    lo = first_j0_zero(tol)
    hi = bisect(lambda x: bessel_j(0, x), 5.0, 6.0, tol)
    return golden_section_max(j0_squared, lo, hi, tol)


@dataclass(frozen=True)
class BellSettings:
    """Two drives for Alice and two for Bob."""

    alice0: RfDrive = OFF
    alice1: RfDrive = OFF
    bob0: RfDrive = OFF
    bob1: RfDrive = OFF

    @property
    def alice(self) -> tuple[RfDrive, RfDrive]:
        return (self.alice0, self.alice1)

    @property
    def bob(self) -> tuple[RfDrive, RfDrive]:
        return (self.bob0, self.bob1)

    def shifted(self, theta: float) -> "BellSettings":
        return BellSettings(*(drive.shifted(theta) for drive in (*self.alice, *self.bob)))

    def pair(self, i: int, j: int) -> tuple[RfDrive, RfDrive]:
        return self.alice[i], self.bob[j]

    def as_dict(self) -> dict:
        out = {}
        for name, drive in zip(("a0", "a1", "b0", "b1"), (*self.alice, *self.bob)):
            out[name] = {"amplitude": drive.amplitude, "phase": drive.phase}
        return out


def optimal_settings(c00: float, theta: float = 0.0) -> BellSettings:
    """Collinear settings realizing ``C_00 = C_01 = C_10 = C_11 / 3 = c00``."""
    if c00 == 0:
        return BellSettings()
    near = RfDrive(0.5 * c00, theta)
    far = RfDrive(1.5 * c00, theta + math.pi)
    return BellSettings(near, far, near, far)


@dataclass(frozen=True)
class QuadrilateralGeometry:
    sides: tuple[float, float, float, float]  # C_00, C_01, C_10, C_11
    vertices: dict[str, tuple[float, float]] = field(default_factory=dict)

    def constraint_slack(self) -> tuple[float, float, float, float]:
        """Sum of the other three sides minus each side; all must be >= 0."""
        total = sum(self.sides)
        return tuple(total - 2.0 * s for s in self.sides)

    def is_valid(self, tol: float = 1e-12) -> bool:
        return all(slack >= -tol for slack in self.constraint_slack())


def geometry_from_settings(settings: BellSettings) -> QuadrilateralGeometry:
    """Vertices ``a_i = a_i (cos alpha_i, sin alpha_i)``, ``b_j = -b_j (cos beta_j, sin beta_j)``."""
    vertices = {}
    for name, drive, sign in (
        ("a0", settings.alice0, 1.0),
        ("a1", settings.alice1, 1.0),
        ("b0", settings.bob0, -1.0),
        ("b1", settings.bob1, -1.0),
    ):
        vertices[name] = (sign * drive.amplitude * math.cos(drive.phase), sign * drive.amplitude * math.sin(drive.phase))
    sides = tuple(
        math.dist(vertices[f"a{i}"], vertices[f"b{j}"]) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))
    )
    return QuadrilateralGeometry(sides, vertices)


def ch74_from_sides(c00: float, c01: float, c10: float, c11: float) -> float:
    return j0_squared(c00) + j0_squared(c01) + j0_squared(c10) - j0_squared(c11)


@dataclass(frozen=True)
class BellResult:
    s_value: float
    settings: BellSettings
    component_values: tuple[float, float, float, float]
    sides: tuple[float, float, float, float]

    def as_dict(self) -> dict:
        names = ("A0B0", "A0B1", "A1B0", "A1B1")
        return {
            "S": self.s_value,
            "C00": self.sides[0],
            "sides": dict(zip(("C00", "C01", "C10", "C11"), self.sides)),
            "components": dict(zip(names, self.component_values)),
            "settings": self.settings.as_dict(),
        }


def ch74_evaluate(settings: BellSettings) -> BellResult:
    """Normalized CH74 value for the given settings."""
    sides = []
    terms = []
    for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)):
        c = graf_compose(*settings.pair(i, j)).amplitude
        sides.append(c)
        terms.append(j0_squared(c))
    s = terms[0] + terms[1] + terms[2] - terms[3]
    return BellResult(s, settings, tuple(terms), tuple(sides))


def boundary_objective(c00: float) -> float:
    """``3 J_0(c)^2 - J_0(3c)^2`` on the optimal boundary face."""
    return 3.0 * j0_squared(c00) - j0_squared(3.0 * c00)


def optimize_boundary(tol: float = 1e-6, theta: float = 0.0) -> BellResult:
    """Maximize CH74 on ``C_00 = C_01 = C_10 = C_11 / 3`` by golden-section search."""
    upper = j0_squared_level(2.0 / 3.0)
    c00, _ = golden_section_max(boundary_objective, 0.0, upper, tol)
    return ch74_evaluate(optimal_settings(c00, theta))


def stationarity_residuals(sides) -> tuple[float, float, float]:
    """Residuals of the stationarity conditions on the face ``C_11 = C_00 + C_01 + C_10``.

    On that face ``dS/dC_0j = g(C_0j) - g(C_11)`` with ``g`` the slope of
    ``J_0^2``; all three vanish at a stationary point.
    """
    c00, c01, c10, c11 = sides
    g11 = j0_squared_slope(c11)
    return (j0_squared_slope(c00) - g11, j0_squared_slope(c01) - g11, j0_squared_slope(c10) - g11)


@dataclass(frozen=True)
class BruteForceResult:
    """Outcome of the exhaustive search over admissible side lengths."""

    resolution: int
    side_max: float
    grid_step: float
    best_s: float
    best_sides: tuple[float, float, float, float]
    refined_s: float
    refined_sides: tuple[float, float, float, float]
    stationarity: tuple[float, float, float]
    interior_max: float

    @property
    def slack(self) -> float:
        """Bound on how far the grid maximum may sit below the true optimum.

        ``|d J_0(x)^2 / dx| <= 0.68`` everywhere, and the optimum is within
        half a grid step of a grid point along each of four axes.
        """
        return 4.0 * 0.68 * 0.5 * self.grid_step

    def as_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "side_max": self.side_max,
            "grid_step": self.grid_step,
            "grid_slack": self.slack,
            "best_S": self.best_s,
            "best_sides": list(self.best_sides),
            "refined_S": self.refined_s,
            "refined_sides": list(self.refined_sides),
            "stationarity_residuals": list(self.stationarity),
            "interior_stationary_max_S": self.interior_max,
        }


def _grid_search(values: np.ndarray, j0sq: np.ndarray) -> tuple[float, tuple[int, int, int, int]]:
    n = len(values)
    best = -np.inf
    best_idx = (0, 0, 0, 0)
    c01 = values[:, None, None]
    c10 = values[None, :, None]
    c11 = values[None, None, :]
    tail = j0sq[:, None, None] + j0sq[None, :, None] - j0sq[None, None, :]
    for i in range(n):
        c00 = values[i]
        total = c00 + c01 + c10 + c11
        feasible = (
            (2 * c00 <= total + 1e-12)
            & (2 * c01 <= total + 1e-12)
            & (2 * c10 <= total + 1e-12)
            & (2 * c11 <= total + 1e-12)
        )
        s = np.where(feasible, j0sq[i] + tail, -np.inf)
        k = int(np.argmax(s))  # first occurrence: lexicographically smallest
        if s.flat[k] > best:
            best = float(s.flat[k])
            best_idx = (i, *np.unravel_index(k, s.shape))
    return best, tuple(int(v) for v in best_idx)


def _refine(sides: tuple[float, ...], side_max: float) -> tuple[float, tuple[float, ...]]:
    """Local polish of a grid point inside the admissible region."""
    constraints = [
        {"type": "ineq", "fun": (lambda x, k=k: np.sum(x) - 2.0 * x[k])} for k in range(4)
    ]
    result = minimize(
        lambda x: -ch74_from_sides(*x),
        np.asarray(sides, dtype=float),
        method="SLSQP",
        bounds=[(0.0, side_max)] * 4,
        constraints=constraints,
        options={"ftol": 1e-14, "maxiter": 500},
    )
    x = np.clip(result.x, 0.0, side_max)
    # project back onto the admissible set if the solver overshot slightly
    total = np.sum(x)
    if np.any(2.0 * x > total + 1e-12):
        return ch74_from_sides(*sides), tuple(sides)
    s = ch74_from_sides(*x)
    if s < ch74_from_sides(*sides):
        return ch74_from_sides(*sides), tuple(sides)
    return s, tuple(float(v) for v in x)


def interior_stationary_max(side_max: float = 6.0) -> float:
    """Largest CH74 value over interior stationary points.

    Inside the admissible region each ``C_ij`` must be a stationary point of
    ``J_0^2``: zero, a zero of ``J_0`` or a zero of ``J_1``.
    """
    candidates = [0.0]
    for lo, hi, func in ((2.0, 3.0, 0), (3.5, 4.0, 1), (5.0, 6.0, 0), (6.5, 7.5, 1)):
        root = bisect(lambda x, f=func: bessel_j(f, x), lo, hi)
        if root <= side_max:
            candidates.append(root)
    best = -np.inf
    for sides in itertools.product(candidates, repeat=4):
        total = sum(sides)
        if all(2.0 * s < total for s in sides):
            best = max(best, ch74_from_sides(*sides))
    return best


def optimize_brute_force(grid_resolution: int = 64, side_max: float = 6.0, refine: bool = True) -> BruteForceResult:
    """Exhaustive CH74 search over all admissible ``(C_00, C_01, C_10, C_11)``.

    Every side ranges over ``grid_resolution`` points of ``[0, side_max]``
    and all four quadrilateral inequalities are enforced, so every boundary
    face is visited explicitly. Ties go to the lexicographically smallest
    side tuple.
    """
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be >= 8")
    values = np.linspace(0.0, side_max, grid_resolution)
    j0sq = np.array([j0_squared(v) for v in values])
    best, idx = _grid_search(values, j0sq)
    best_sides = tuple(float(values[k]) for k in idx)
    if refine:
        refined_s, refined_sides = _refine(best_sides, side_max)
    else:
        refined_s, refined_sides = best, best_sides
    return BruteForceResult(
        resolution=grid_resolution,
        side_max=side_max,
        grid_step=float(values[1] - values[0]),
        best_s=best,
        best_sides=best_sides,
        refined_s=refined_s,
        refined_sides=refined_sides,
        stationarity=stationarity_residuals(refined_sides),
        interior_max=interior_stationary_max(side_max),
    )


def implied_short_side(c10: float, tol: float = 1e-12) -> float:
    """``C_00`` in ``[0, x_{2/3}]`` whose ``J_0^2`` slope equals that at ``c10``.

    Returns ``x_{2/3}`` itself when the slope at ``c10`` is steeper than any
    slope available on the short-side interval.
    """
    upper = j0_squared_level(2.0 / 3.0)
    target = j0_squared_slope(c10)
    if target <= j0_squared_slope(upper):
        return upper
    return bisect(lambda x: j0_squared_slope(x) - target, 0.0, upper, tol)


@dataclass(frozen=True)
class AlternativeBranch:
    """Bounds for the branch where one side exceeds ``x_{1/2}``.

    ``lo`` is where the slope of ``J_0^2`` climbs back to its value at
    ``x_{2/3}`` (equal slopes are impossible below it); ``hi`` is where
    ``J_0^2`` falls to ``target - 2`` (beyond it the long side cannot help
    reach ``target``).
    """

    lo: float
    hi: float
    min_short_side: float
    max_value: float


def alternative_branch(target: float | None = None, points: int = 201) -> AlternativeBranch:
    """Largest ``2 J_0(C_00)^2 + J_0(C_10)^2`` over the alternative branch.

    That sum bounds the CH74 value from above, so ``max_value < target``
    rules the branch out.
    """
    if target is None:
        target = optimize_boundary().s_value
    x23 = j0_squared_level(2.0 / 3.0)
    x12 = j0_squared_level(0.5)
    g23 = j0_squared_slope(x23)
    valley, _ = golden_section_max(lambda x: -j0_squared_slope(x), x23, first_j0_zero(), 1e-9)
    lo = bisect(lambda x: j0_squared_slope(x) - g23, max(valley, x12), first_j0_zero())
    hi = j0_squared_level(target - 2.0)
    if hi < lo:
        return AlternativeBranch(lo, hi, x23, -np.inf)
    best = -np.inf
    min_short = np.inf
    for c10 in np.linspace(lo, hi, points):
        c00 = implied_short_side(float(c10))
        min_short = min(min_short, c00)
        best = max(best, 2.0 * j0_squared(c00) + j0_squared(float(c10)))
    return AlternativeBranch(lo, hi, float(min_short), float(best))


def reference_bounds() -> tuple[float, float]:
    """Qubit-pair quantum bound and algebraic bound of the expression."""
    return DIM2_QUANTUM_MAX, ALGEBRAIC_MAX
