"""Two-photon, one-photon and classical interference through two modulators.

Each prediction has its own computational route so that the equivalence
between the schemes is checked rather than assumed:

* two-photon: explicit sum over the entangled state,
  ``sum_p f_{n-p} U_p(a) U_{d-p}(b)``;
* one-photon: product of the two truncated modulator matrices;
* classical: Fourier analysis of the field ``exp(-i a cos(phi - alpha))
  exp(-i b cos(phi - beta))`` sampled over one RF period;
* closed form: ``J_d(C)^2`` with ``C`` from :func:`graf_compose`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from freqbin.bessel import bessel_j, tail_bound
from freqbin.errors import DomainError, TruncationError
from freqbin.modulation import (
    BinWindow,
    RfDrive,
    build_unitary,
    graf_compose,
    unitary_row,
)

DEFAULT_N_MAX = 40
DEFAULT_D_MAX = 10


class Kind(str, enum.Enum):
    TWO_PHOTON = "two_photon"
    ONE_PHOTON = "one_photon"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class BiphotonState:
    """Amplitudes ``f_n`` of ``sum_n f_n |n>|-n>`` over the bins of ``window``."""

    window: BinWindow
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.window.size,):
            raise DomainError(f"expected {self.window.size} amplitudes, got shape {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-12):
            raise DomainError(f"state must be normalized, sum |f_n|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, window: BinWindow, amplitudes) -> "BiphotonState":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)))
        if norm == 0:
            raise DomainError("state has zero norm")
        return cls(window, amps / norm)

    def amplitude(self, n: int) -> complex:
        if abs(n) > self.window.n_max:
            return 0j
        return complex(self.amplitudes[n + self.window.n_max])

    def weight(self, n: int) -> float:
        return abs(self.amplitude(n)) ** 2

    @property
    def is_flat(self) -> bool:
        weights = np.abs(self.amplitudes) ** 2
        return bool(np.allclose(weights, weights[0], rtol=0, atol=1e-15))


def flat_state(window: BinWindow) -> BiphotonState:
    """Equal-weight state, ``f_n = (2 n_max + 1)^(-1/2)``."""
    return BiphotonState(window, np.full(window.size, 1.0 / math.sqrt(window.size), dtype=complex))


@dataclass(frozen=True)
class OutcomeDistribution:
    """Normalized detection probabilities indexed by the bin shift ``d``."""

    kind: Kind
    center_bin: int
    values: np.ndarray = field(repr=False)

    @property
    def d_max(self) -> int:
        return (len(self.values) - 1) // 2

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(-self.d_max, self.d_max + 1)

    def __getitem__(self, d: int) -> float:
        return float(self.values[d + self.d_max])


def _check_reach(window: BinWindow, n: int, alice: RfDrive, bob: RfDrive) -> int:
    reach = window.n_max - abs(n)
    if reach < 0:
        raise TruncationError(f"bin {n} lies outside the window +-{window.n_max}")
    window.check_adequate(max(alice.amplitude, bob.amplitude), reach)
    return reach


def _pair_amplitude(state: BiphotonState, alice: RfDrive, bob: RfDrive, n: int, d: int) -> complex:
    window = state.window
    n_max = window.n_max
    # Alice's photon came from bin n - p, which must lie in the window
    p = np.arange(n - n_max, n + n_max + 1)
    span = int(np.max(np.abs(p))) + abs(d)
    u_alice = unitary_row(alice, span)
    u_bob = unitary_row(bob, span)
    f = state.amplitudes[::-1]  # f_{n-p} for p = n - n_max .. n + n_max
    return complex(np.sum(f * u_alice[p + span] * u_bob[d - p + span]))


def joint_probability_series(state: BiphotonState, alice: RfDrive, bob: RfDrive, n: int, d: int) -> float:
    """Probability of Alice in bin ``n`` and Bob in bin ``d - n``, by direct summation.

    Evaluates ``|sum_p f_{n-p} U_p(a, alpha) U_{d-p}(b, beta)|^2`` over every
    source bin in the window. For a flat state this is
    ``|f_n|^2 |c_d|^2``; for a non-flat state it is the exact truncated
    result that the closed form only approximates.
    """
    _check_reach(state.window, n, alice, bob)
    if abs(d - n) > state.window.n_max:
        raise TruncationError(f"Bob's bin {d - n} lies outside the window")
    return abs(_pair_amplitude(state, alice, bob, n, d)) ** 2


def joint_probability_closed(state: BiphotonState, alice: RfDrive, bob: RfDrive, n: int, d: int) -> float:
    """``|f_n|^2 J_d(C)^2`` with ``C`` the composed drive amplitude."""
    composed = graf_compose(alice, bob)
    return state.weight(n) * bessel_j(d, composed.amplitude) ** 2


def closed_form_probability(alice: RfDrive, bob: RfDrive, d: int) -> float:
    """Normalized transition probability ``J_d(C)^2``."""
    return bessel_j(d, graf_compose(alice, bob).amplitude) ** 2


def single_photon_probability(alice: RfDrive, bob: RfDrive, n: int, d: int, window: BinWindow) -> float:
    """``|<n + d| U(b, beta) U(a, alpha) |n>|^2`` from the matrix product."""
    _check_reach(window, n, alice, bob)
    product = build_unitary(bob, window) @ build_unitary(alice, window)
    return abs(product.element(n + d, n)) ** 2


def classical_sideband_powers(alice: RfDrive, bob: RfDrive, d_max: int, samples: int | None = None) -> np.ndarray:
    """Relative optical power in bins ``-d_max..d_max`` for a monochromatic input.

    The field after both modulators is sampled over one RF period and its
    Fourier coefficients taken with an FFT; no Bessel functions are used.
    """
    if samples is None:
        reach = math.ceil(alice.amplitude + bob.amplitude)
        samples = 1 << max(7, int(math.ceil(math.log2(4 * (reach + d_max + 40)))))
    phi = 2.0 * math.pi * np.arange(samples) / samples
    field_ = np.exp(-1j * alice.amplitude * np.cos(phi - alice.phase)) * np.exp(
        -1j * bob.amplitude * np.cos(phi - bob.phase)
    )
    # coefficient of exp(-i m phi) is the inverse DFT at index m
    coefficients = np.fft.ifft(field_)
    orders = np.arange(-d_max, d_max + 1)
    return np.abs(coefficients[orders % samples]) ** 2


def two_photon_distribution(
    state: BiphotonState, alice: RfDrive, bob: RfDrive, n: int = 0, d_max: int = DEFAULT_D_MAX
) -> OutcomeDistribution:
    weight = state.weight(n)
    if weight == 0:
        raise DomainError(f"state has no weight in bin {n}")
    values = [joint_probability_series(state, alice, bob, n, d) / weight for d in range(-d_max, d_max + 1)]
    return OutcomeDistribution(Kind.TWO_PHOTON, n, np.array(values))


def one_photon_distribution(
    alice: RfDrive, bob: RfDrive, window: BinWindow, n: int = 0, d_max: int = DEFAULT_D_MAX
) -> OutcomeDistribution:
    _check_reach(window, n, alice, bob)
    product = build_unitary(bob, window) @ build_unitary(alice, window)
    column = product.entries[:, window.index(n)]
    values = np.zeros(2 * d_max + 1)
    for i, d in enumerate(range(-d_max, d_max + 1)):
        if abs(n + d) <= window.n_max:
            values[i] = abs(column[window.index(n + d)]) ** 2
    return OutcomeDistribution(Kind.ONE_PHOTON, n, values)


def classical_distribution(alice: RfDrive, bob: RfDrive, n: int = 0, d_max: int = DEFAULT_D_MAX) -> OutcomeDistribution:
    return OutcomeDistribution(Kind.CLASSICAL, n, classical_sideband_powers(alice, bob, d_max))


def closed_form_distribution(alice: RfDrive, bob: RfDrive, d_max: int = DEFAULT_D_MAX) -> np.ndarray:
    c = graf_compose(alice, bob).amplitude
    return np.array([bessel_j(d, c) ** 2 for d in range(-d_max, d_max + 1)])


@dataclass(frozen=True)
class PhaseScan:
    """Normalized predictions along a scan of ``alpha - beta``."""

    alice_amplitude: float
    bob_amplitude: float
    d: int
    phase_difference: np.ndarray = field(repr=False)
    two_photon: np.ndarray = field(repr=False)
    one_photon: np.ndarray = field(repr=False)
    closed_form: np.ndarray = field(repr=False)

    def rows(self):
        return zip(self.phase_difference, self.two_photon, self.one_photon, self.closed_form)


def scan_phase(
    alice_amplitude: float,
    bob_amplitude: float,
    d: int,
    phase_points: int,
    window: BinWindow | None = None,
) -> PhaseScan:
    """Interference pattern over a uniform grid of ``alpha - beta`` in [-pi, pi].

    Bob's phase is held at 0 and Alice's phase carries the difference. The
    two-photon column uses the flat entangled state and the series route,
    the one-photon column the matrix product, and the closed-form column
    ``J_d(C)^2``.
    """
    if phase_points < 2:
        raise DomainError("phase_points must be >= 2")
    window = window or BinWindow(DEFAULT_N_MAX)
    state = flat_state(window)
    weight = state.weight(0)
    bob = RfDrive(bob_amplitude, 0.0)
    build_bob = build_unitary(bob, window)
    grid = np.linspace(-math.pi, math.pi, phase_points)
    two, one, closed = (np.empty(phase_points) for _ in range(3))
    centre = window.index(0)
    for i, delta in enumerate(grid):
        alice = RfDrive(alice_amplitude, float(delta))
        two[i] = joint_probability_series(state, alice, bob, 0, d) / weight
        product = build_bob.entries[window.index(d), :] @ build_unitary(alice, window).entries[:, centre]
        one[i] = abs(product) ** 2
        closed[i] = closed_form_probability(alice, bob, d)
    return PhaseScan(alice_amplitude, bob_amplitude, d, grid, two, one, closed)


@dataclass
class EquivalenceReport:
    samples: int
    amplitude_max: float
    n_max: int
    d_max: int
    tolerance: float
    max_series_vs_closed: float = 0.0
    max_matrix_vs_closed: float = 0.0
    max_classical_vs_closed: float = 0.0
    max_series_vs_matrix: float = 0.0
    tail_bound: float = 0.0

    @property
    def max_deviation(self) -> float:
        return max(
            self.max_series_vs_closed,
            self.max_matrix_vs_closed,
            self.max_classical_vs_closed,
            self.max_series_vs_matrix,
        )

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "amplitude_max": self.amplitude_max,
            "n_max": self.n_max,
            "d_max": self.d_max,
            "tolerance": self.tolerance,
            "tail_bound": self.tail_bound,
            "max_series_vs_closed": self.max_series_vs_closed,
            "max_matrix_vs_closed": self.max_matrix_vs_closed,
            "max_classical_vs_closed": self.max_classical_vs_closed,
            "max_series_vs_matrix": self.max_series_vs_matrix,
            "max_deviation": self.max_deviation,
            "passed": self.passed,
        }


def equivalence_report(
    amplitude_max: float = 3.0,
    samples: int = 200,
    seed: int = 0,
    window: BinWindow | None = None,
    d_max: int = DEFAULT_D_MAX,
    tolerance: float = 1e-8,
) -> EquivalenceReport:
    """Compare the four prediction routes on random drive pairs.

    Amplitudes are drawn uniformly from ``[0, amplitude_max]`` and phases from
    ``(-pi, pi]``. Deviations are absolute differences of normalized
    probabilities over ``|d| <= d_max``.
    """
    window = window or BinWindow(DEFAULT_N_MAX)
    rng = np.random.default_rng(seed)
    state = flat_state(window)
    report = EquivalenceReport(samples, amplitude_max, window.n_max, d_max, tolerance)
    for _ in range(samples):
        a, b = rng.uniform(0.0, amplitude_max, size=2)
        alpha, beta = rng.uniform(-math.pi, math.pi, size=2)
        alice, bob = RfDrive(a, alpha), RfDrive(b, beta)
        closed = closed_form_distribution(alice, bob, d_max)
        series = two_photon_distribution(state, alice, bob, 0, d_max).values
        matrix = one_photon_distribution(alice, bob, window, 0, d_max).values
        classical = classical_distribution(alice, bob, 0, d_max).values
        report.max_series_vs_closed = max(report.max_series_vs_closed, float(np.max(np.abs(series - closed))))
        report.max_matrix_vs_closed = max(report.max_matrix_vs_closed, float(np.max(np.abs(matrix - closed))))
        report.max_classical_vs_closed = max(
            report.max_classical_vs_closed, float(np.max(np.abs(classical - closed)))
        )
        report.max_series_vs_matrix = max(report.max_series_vs_matrix, float(np.max(np.abs(series - matrix))))
    # worst case over the sampled range: the largest composed amplitude
    report.tail_bound = tail_bound(2.0 * amplitude_max, window.n_max)
    return report
