"""Electro-optic phase modulators acting on frequency bins.

A modulator driven at ``rf_frequency`` with depth ``c`` and phase ``gamma``
scatters bin ``n`` into bin ``n + m`` with amplitude
``U_m(c, gamma) = J_m(c) exp(i m (gamma - pi/2))``. Two modulators in series
driven at the same frequency act like a single one, see :func:`graf_compose`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from freqbin.bessel import bessel_j, bessel_j_row, tail_bound
from freqbin.errors import DomainError, TruncationError

SPEED_OF_LIGHT = 299_792_458.0

# degenerate wavelength of the down-converted pairs, 1547.743 nm
DEFAULT_CENTER_FREQUENCY = SPEED_OF_LIGHT / 1547.743e-9
DEFAULT_RF_FREQUENCY = 25e9
DEFAULT_FILTER_WIDTH = 3e9

# extra orders a window must hold beyond the drive amplitude
WINDOW_MARGIN = 10
# narrower windows still pass when their truncation tail is below this
WINDOW_TAIL_TOLERANCE = 1e-12

# composed amplitudes below this fraction of a + b are treated as exact
# cancellation
_CANCEL_EPS = 4.0 * np.finfo(float).eps


def wrap_phase(phase: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(float(phase), 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class RfDrive:
    """Sinusoidal drive of one modulator.

    A negative amplitude is folded into the phase, so ``amplitude >= 0``
    always holds and ``phase`` lies in (-pi, pi].
    """

    amplitude: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        amplitude = float(self.amplitude)
        phase = float(self.phase)
        if not (math.isfinite(amplitude) and math.isfinite(phase)):
            raise DomainError("drive amplitude and phase must be finite")
        if amplitude < 0:
            amplitude = -amplitude
            phase += math.pi
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "phase", wrap_phase(phase))

    def shifted(self, delta: float) -> "RfDrive":
        # reduce first so a large delta does not swamp the phase
        return RfDrive(self.amplitude, self.phase + wrap_phase(delta))

    @property
    def phasor(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


OFF = RfDrive(0.0, 0.0)


@dataclass(frozen=True)
class BinWindow:
    """Finite set of bins ``-n_max..n_max`` around the degenerate frequency.

    Frequencies are ordinary frequencies in Hz; the angular RF frequency is
    ``2 pi rf_frequency``.
    """

    n_max: int = 40
    rf_frequency: float = DEFAULT_RF_FREQUENCY
    filter_width: float = DEFAULT_FILTER_WIDTH
    center_frequency: float = DEFAULT_CENTER_FREQUENCY

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise DomainError(f"n_max must be a non-negative integer, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        for name in ("rf_frequency", "filter_width", "center_frequency"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not self.filter_width < self.rf_frequency:
            raise DomainError("filter_width must be smaller than rf_frequency so bins stay isolated")

    @property
    def size(self) -> int:
        return 2 * self.n_max + 1

    @property
    def bins(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def index(self, n: int) -> int:
        if abs(n) > self.n_max:
            raise TruncationError(f"bin {n} lies outside the window +-{self.n_max}")
        return n + self.n_max

    def bin_frequency(self, n: int) -> float:
        return self.center_frequency + n * self.rf_frequency

    def check_adequate(self, amplitude: float, reach: int | None = None) -> None:
        """Raise :class:`TruncationError` if ``reach`` bins cannot hold the drive.

        A reach of ``ceil(amplitude) + 10`` always suffices. Smaller reaches
        pass when the probability lost beyond them is bounded by 1e-12,
        which admits small windows for weak drives.
        """
        reach = self.n_max if reach is None else reach
        needed = math.ceil(amplitude) + WINDOW_MARGIN
        if reach < needed and (reach < 0 or tail_bound(amplitude, reach) > WINDOW_TAIL_TOLERANCE):
            raise TruncationError(
                f"window reach {reach} too small for amplitude {amplitude:g}; need >= {needed}"
            )


def adequate_window(amplitude: float, **kwargs) -> BinWindow:
    """Smallest window satisfying the adequacy rule for ``amplitude``."""
    return BinWindow(n_max=math.ceil(amplitude) + WINDOW_MARGIN, **kwargs)


@dataclass(frozen=True)
class TruncatedUnitary:
    """Operator on the bins of ``window``; ``entries[i, j]`` maps bin j to bin i.

    Matrix index ``i`` corresponds to bin ``i - window.n_max``.
    """

    window: BinWindow
    entries: np.ndarray = field(repr=False)

    def element(self, m: int, n: int) -> complex:
        """Amplitude ``<m|U|n>``."""
        return complex(self.entries[self.window.index(m), self.window.index(n)])

    def column_norm(self, n: int = 0) -> float:
        column = self.entries[:, self.window.index(n)]
        return float(np.sum(np.abs(column) ** 2))

    def __matmul__(self, other: "TruncatedUnitary") -> "TruncatedUnitary":
        if self.window != other.window:
            raise ValueError("cannot compose operators on different windows")
        return TruncatedUnitary(self.window, self.entries @ other.entries)


def unitary_element(drive: RfDrive, n: int) -> complex:
    """``U_n(c, gamma) = J_n(c) exp(i n (gamma - pi/2))``."""
    angle = n * (drive.phase - 0.5 * math.pi)
    return bessel_j(n, drive.amplitude) * complex(math.cos(angle), math.sin(angle))


def unitary_row(drive: RfDrive, n_max: int) -> np.ndarray:
    """Vector of ``U_m(c, gamma)`` for ``m = -n_max..n_max``."""
    orders = np.arange(-n_max, n_max + 1)
    return bessel_j_row(drive.amplitude, n_max) * np.exp(1j * orders * (drive.phase - 0.5 * math.pi))


def build_unitary(drive: RfDrive, window: BinWindow) -> TruncatedUnitary:
    """Toeplitz matrix of a single modulator restricted to ``window``.

    Raises
    ------
    TruncationError
        If ``window.n_max < ceil(amplitude) + 10``.
    """
    window.check_adequate(drive.amplitude)
    n_max = window.n_max
    row = unitary_row(drive, 2 * n_max)
    offsets = window.bins[:, None] - window.bins[None, :]
    return TruncatedUnitary(window, row[offsets + 2 * n_max])


def truncation_tail(drive: RfDrive, window: BinWindow) -> float:
    """Bound on the probability a centre-bin photon leaves ``window``."""
    return tail_bound(drive.amplitude, window.n_max)


def graf_compose(a: RfDrive, b: RfDrive) -> RfDrive:
    """Single drive equivalent to modulator ``a`` followed by modulator ``b``.

    ``C^2 = a^2 + b^2 + 2ab cos(alpha - beta)`` is evaluated as
    ``(a - b)^2 + 4ab cos^2((alpha - beta)/2)`` so exact cancellation gives
    ``C = 0`` rather than the square root of a rounding error; the phase
    comes from the two-argument arctangent of the summed phasors. When
    ``C = 0`` the phase is set to 0.
    """
    half_diff = 0.5 * (a.phase - b.phase)
    radicand = (a.amplitude - b.amplitude) ** 2 + 4.0 * a.amplitude * b.amplitude * math.cos(half_diff) ** 2
    amplitude = math.sqrt(max(radicand, 0.0))
    if amplitude <= _CANCEL_EPS * (a.amplitude + b.amplitude) or amplitude == 0.0:
        return RfDrive(0.0, 0.0)
    x = a.amplitude * math.cos(a.phase) + b.amplitude * math.cos(b.phase)
    y = a.amplitude * math.sin(a.phase) + b.amplitude * math.sin(b.phase)
    return RfDrive(amplitude, math.atan2(y, x))


@dataclass(frozen=True)
class PropagationSegment:
    """Fibre of ``length`` metres with inverse group velocity ``group_delay_slope`` (s/m)."""

    length: float = 0.0
    group_delay_slope: float = 0.0

    def __post_init__(self):
        if not self.length >= 0:
            raise DomainError("segment length must be non-negative")

    def phase_per_bin(self, window: BinWindow) -> float:
        """Relative phase between neighbouring bins, ``beta_1 * Omega_RF * L``."""
        return self.group_delay_slope * 2.0 * math.pi * window.rf_frequency * self.length


def propagation_phase(segment: PropagationSegment, window: BinWindow) -> TruncatedUnitary:
    """Diagonal operator ``exp(i n beta_1 Omega_RF L)`` on the bins of ``window``.

    The zeroth-order phase and the common intra-bin offset are global phases
    and are dropped.
    """
    # km-scale fibre gives delta ~ 1e7 rad; reduce before scaling by the bin index
    delta = wrap_phase(segment.phase_per_bin(window))
    return TruncatedUnitary(window, np.diag(np.exp(1j * delta * window.bins)))


def absorb_propagation(drive: RfDrive, segment: PropagationSegment, window: BinWindow) -> RfDrive:
    """Drive that, placed after ``segment``, acts like ``drive`` placed before it.

    ``P(delta) U(c, gamma) = U(c, gamma + delta) P(delta)`` with ``delta`` the
    per-bin propagation phase. The leftover diagonal ``P(delta)`` on the input
    side only multiplies each input bin by a phase and leaves every
    transition probability unchanged.
    """
    return drive.shifted(segment.phase_per_bin(window))
