"""Count rates, Poisson counting experiments and the statistics built on them.

Every rate factorizes as ``rate = base_rate * J_d(C)^2 + noise_rate``: the
base rate is the rate with modulation off and the noise rate lumps detector
dark counts and accidental coincidences into one additive floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from freqbin.bessel import bessel_j
from freqbin.errors import DomainError, UndefinedResultError
from freqbin.interference import Kind
from freqbin.modulation import OFF, RfDrive, graf_compose, wrap_phase

# EOPM parameters of the RF chain
HALF_WAVE_VOLTAGE = 2.9
RF_IMPEDANCE = 50.0


@dataclass(frozen=True)
class DetectorModel:
    """Detector imperfections folded into a single noise rate.

    ``dark_rate`` is in Hz. Gated detectors need ``gate_rate`` (Hz) and
    ``gate_width`` (s); continuous ones must leave both unset.
    """

    efficiency: float = 1.0
    dark_rate: float = 0.0
    mode: str = "continuous"
    gate_rate: float | None = None
    gate_width: float | None = None
    coincidence_window: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError("efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.coincidence_window < 0:
            raise DomainError("dark_rate and coincidence_window must be non-negative")
        if self.mode == "gated":
            if self.gate_rate is None or self.gate_width is None:
                raise DomainError("gated detectors need gate_rate and gate_width")
            if self.gate_rate < 0 or self.gate_width < 0:
                raise DomainError("gate_rate and gate_width must be non-negative")
        elif self.mode == "continuous":
            if self.gate_rate is not None or self.gate_width is not None:
                raise DomainError("gate_rate and gate_width only apply to gated detectors")
        else:
            raise DomainError(f"unknown detector mode {self.mode!r}")

    def dark_probability_per_gate(self) -> float:
        if self.mode != "gated":
            raise DomainError("only gated detectors have gates")
        return self.dark_rate * self.gate_width

    def single_noise_rate(self) -> float:
        """Dark counts registered per second by one detector."""
        if self.mode == "gated":
            return self.gate_rate * self.dark_probability_per_gate()
        return self.dark_rate

    def coincidence_noise_rate(self, singles_a: float = 0.0, singles_b: float = 0.0) -> float:
        """Accidental coincidence rate for two detectors with the given singles rates."""
        rate_a = singles_a + self.single_noise_rate()
        rate_b = singles_b + self.single_noise_rate()
        return self.coincidence_window * rate_a * rate_b


# id Quantique APD in gated mode: 100 kHz gates of 2.5 ns, 3e-6 dark counts per ns
APD_GATED = DetectorModel(efficiency=0.10, dark_rate=3e-6 * 1e9, mode="gated", gate_rate=100e3, gate_width=2.5e-9)
# SSPDs in continuous mode with a 0.6 ns coincidence window
SSPD = DetectorModel(efficiency=0.05, dark_rate=30.0, mode="continuous", coincidence_window=0.6e-9)
IDEAL = DetectorModel()


def rf_amplitude_from_power(
    power_watts: float, half_wave_voltage: float = HALF_WAVE_VOLTAGE, impedance: float = RF_IMPEDANCE
) -> float:
    """Modulation depth ``pi sqrt(R P) / V_pi`` in radians."""
    if not (power_watts >= 0 and half_wave_voltage > 0 and impedance > 0):
        raise DomainError("power must be >= 0 and half-wave voltage, impedance > 0")
    return math.pi * math.sqrt(impedance * power_watts) / half_wave_voltage


def rf_power_from_amplitude(
    amplitude: float, half_wave_voltage: float = HALF_WAVE_VOLTAGE, impedance: float = RF_IMPEDANCE
) -> float:
    if amplitude < 0 or half_wave_voltage <= 0 or impedance <= 0:
        raise DomainError("amplitude must be >= 0 and half-wave voltage, impedance > 0")
    return (amplitude * half_wave_voltage / math.pi) ** 2 / impedance


def expected_rate(
    kind: Kind | str,
    base_rate: float,
    noise_rate: float,
    alice: RfDrive,
    bob: RfDrive,
    d: int = 0,
    floor: float = 0.0,
) -> float:
    """Mean detection rate ``base_rate * J_d(C)^2 + noise_rate``.

    The same law holds for coincidences, single photons and classical power,
    so ``kind`` only names the units. ``floor`` is a fraction of the base rate
    leaking into every setting through setup imperfections (imperfect bin
    isolation, polarization, RF errors); it rescales the pattern to
    ``(1 - floor) J_d(C)^2 + floor`` and is zero for an ideal setup.
    """
    Kind(kind)
    if base_rate < 0 or noise_rate < 0:
        raise DomainError("rates must be non-negative")
    if not 0.0 <= floor < 1.0:
        raise DomainError("floor must lie in [0, 1)")
    pattern = bessel_j(d, graf_compose(alice, bob).amplitude) ** 2
    return base_rate * ((1.0 - floor) * pattern + floor) + noise_rate


@dataclass(frozen=True)
class ExperimentPlan:
    """A counting run: one reference measurement plus one per setting.

    ``reference_time`` defaults to ``integration_time``.
    """

    kind: Kind = Kind.TWO_PHOTON
    base_rate: float = 20.0
    noise_rate: float = 0.01
    integration_time: float = 300.0
    settings: tuple[tuple[RfDrive, RfDrive], ...] = ()
    rng_seed: int = 0
    d: int = 0
    floor: float = 0.0
    reference_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "settings", tuple(tuple(pair) for pair in self.settings))
        if self.integration_time <= 0:
            raise DomainError("integration_time must be positive")
        if self.reference_time is not None and self.reference_time <= 0:
            raise DomainError("reference_time must be positive")
        if self.base_rate < 0 or self.noise_rate < 0:
            raise DomainError("rates must be non-negative")

    @property
    def reference_duration(self) -> float:
        return self.integration_time if self.reference_time is None else self.reference_time


@dataclass(frozen=True)
class CountRecord:
    """Counts for one setting; ``setting_index == -1`` marks the modulation-off reference.

    ``normalized_value = k / r`` with ``k`` the observed counts and ``r`` the
    reference counts ``R`` rescaled to the same duration. Its standard error
    treats both as independent Poisson counts:
    ``sigma^2 = k / r^2 + (k / r)^2 / R`` (``k`` is replaced by 1 when
    ``k = 0``). The reference record itself carries ``1 / sqrt(R)``.
    """

    setting_index: int
    expected_rate: float
    duration: float
    observed_counts: int
    normalized_value: float
    standard_error: float

    def as_dict(self) -> dict:
        return {
            "setting_index": self.setting_index,
            "expected_rate": self.expected_rate,
            "duration": self.duration,
            "observed_counts": self.observed_counts,
            "normalized_value": self.normalized_value,
            "standard_error": self.standard_error,
        }


REFERENCE_INDEX = -1
NOISE_INDEX = -2


def setting_rng(seed: int, setting_index: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, setting_index)``.

    Index -1 is the modulation-off reference and -2 the separate noise
    measurement.
    """
    if seed < 0 or setting_index < NOISE_INDEX:
        raise DomainError("seed must be non-negative and setting_index >= -2")
    return np.random.default_rng([int(seed), setting_index - NOISE_INDEX])


def simulate_noise_counts(noise_rate: float, duration: float, seed: int) -> int:
    """Counts of an independent noise-only measurement (e.g. sources blocked)."""
    return int(setting_rng(seed, NOISE_INDEX).poisson(noise_rate * duration))


def _normalize(counts: int, reference: float, raw_reference: int) -> tuple[float, float]:
    if raw_reference <= 0:
        return math.nan, math.nan
    value = counts / reference
    error = math.sqrt(max(counts, 1) / reference**2 + value * value / raw_reference)
    return value, error


def simulate_counts(plan: ExperimentPlan) -> list[CountRecord]:
    """Poisson realization of ``plan``; the first record is the reference.

    Each setting draws from its own stream keyed by ``(rng_seed, index)``, so
    results do not depend on evaluation order.
    """
    ref_rate = expected_rate(plan.kind, plan.base_rate, plan.noise_rate, OFF, OFF, 0)
    ref_time = plan.reference_duration
    ref_counts = int(setting_rng(plan.rng_seed, REFERENCE_INDEX).poisson(ref_rate * ref_time))
    # reference counts expressed for one setting's integration time
    scaled_ref = ref_counts * plan.integration_time / ref_time
    if ref_counts > 0:
        ref_record = CountRecord(REFERENCE_INDEX, ref_rate, ref_time, ref_counts, 1.0, 1.0 / math.sqrt(ref_counts))
    else:
        ref_record = CountRecord(REFERENCE_INDEX, ref_rate, ref_time, 0, math.nan, math.nan)
    records = [ref_record]
    for index, (alice, bob) in enumerate(plan.settings):
        rate = expected_rate(plan.kind, plan.base_rate, plan.noise_rate, alice, bob, plan.d, plan.floor)
        counts = int(setting_rng(plan.rng_seed, index).poisson(rate * plan.integration_time))
        value, error = _normalize(counts, scaled_ref, ref_counts)
        records.append(CountRecord(index, rate, plan.integration_time, counts, value, error))
    return records


class Visibility(NamedTuple):
    """Raw and net visibility; ``None`` marks an undefined value."""

    raw: float | None
    net: float | None


def visibility(n_max_counts: float, n_min_counts: float, n_noise_counts: float = 0.0) -> Visibility:
    """``raw = (max - min)/(max + min)``, ``net = (max - min)/(max + min - 2 noise)``.

    ``raw`` is ``None`` when ``max + min = 0``; ``net`` is ``None`` when the
    noise exceeds the minimum or the subtracted denominator vanishes.
    """
    if n_max_counts < 0 or n_min_counts < 0 or n_noise_counts < 0:
        raise DomainError("counts must be non-negative")
    total = n_max_counts + n_min_counts
    raw = None if total == 0 else (n_max_counts - n_min_counts) / total
    net_denominator = total - 2.0 * n_noise_counts
    if n_noise_counts > n_min_counts or net_denominator <= 0:
        net = None
    else:
        net = (n_max_counts - n_min_counts) / net_denominator
    return Visibility(raw, net)


def visibility_errors(n_max_counts: float, n_min_counts: float, n_noise_counts: float = 0.0) -> Visibility:
    """First-order Poisson standard errors of :func:`visibility`.

    Maximum, minimum and noise counts are independent, each with variance
    equal to its mean.
    """
    total = n_max_counts + n_min_counts
    if total <= 0:
        return Visibility(None, None)
    raw = 2.0 * math.sqrt(n_min_counts**2 * n_max_counts + n_max_counts**2 * n_min_counts) / total**2
    denom = total - 2.0 * n_noise_counts
    if n_noise_counts > n_min_counts or denom <= 0:
        return Visibility(raw, None)
    diff = n_max_counts - n_min_counts
    d_max = (denom - diff) / denom**2
    d_min = (-denom - diff) / denom**2
    d_noise = 2.0 * diff / denom**2
    net = math.sqrt(d_max**2 * n_max_counts + d_min**2 * n_min_counts + d_noise**2 * n_noise_counts)
    return Visibility(raw, net)


def expected_visibility(noise_to_signal: float, floor: float = 0.0) -> Visibility:
    """Visibilities of a pattern with relative noise ``noise_rate / base_rate`` and floor."""
    n_max = 1.0 + noise_to_signal
    n_min = floor + noise_to_signal
    return visibility(n_max, n_min, noise_to_signal)


def noise_model_for(raw: float, net: float) -> tuple[float, float]:
    """``(floor, noise_to_signal)`` that reproduce the given raw and net visibilities."""
    if not 0 < raw <= net <= 1:
        raise DomainError("need 0 < raw <= net <= 1")
    floor = (1.0 - net) / (1.0 + net)
    noise_to_signal = max(0.0, 0.5 * ((1.0 - floor) / raw - 1.0 - floor))
    return floor, noise_to_signal


class BellStatistics(NamedTuple):
    s_estimate: float
    s_sigma: float
    sigmas_of_violation: float


def bell_statistics(records: Sequence[CountRecord], reference: CountRecord) -> BellStatistics:
    """CH74 estimate from four setting counts and the modulation-off reference.

    ``S = (k00 + k01 + k10 - k11) / r`` with ``r`` the reference counts scaled
    to the settings' duration. The error is the first-order delta method in
    which the reference enters every term through the shared denominator:

        sigma_S^2 = (k00 + k01 + k10 + k11) / r^2 + S^2 * var(r) / r^2,

    ``var(r) / r^2 = 1 / R`` for ``R`` raw reference counts. Per-setting
    standard errors (``sqrt(k)/r``) leave out the second, common term.
    """
    if len(records) != 4:
        raise DomainError("need exactly four setting records")
    if reference.observed_counts <= 0:
        raise UndefinedResultError("reference counts must be positive")
    durations = {record.duration for record in records}
    if len(durations) != 1:
        raise DomainError("setting records must share one integration time")
    duration = durations.pop()
    r = reference.observed_counts * duration / reference.duration
    k = [record.observed_counts for record in records]
    numerator = k[0] + k[1] + k[2] - k[3]
    s = numerator / r
    variance = sum(k) / r**2 + s * s / reference.observed_counts
    sigma = math.sqrt(variance)
    violation = (s - 2.0) / sigma if sigma > 0 else math.copysign(math.inf, s - 2.0)
    return BellStatistics(s, sigma, violation)


def component_sigma(value: float, counts_at_unity: float) -> float:
    """Numerator-only standard error of a normalized value ``k / r``."""
    return math.sqrt(value / counts_at_unity)


def counts_for_component_sigma(value: float, sigma: float) -> float:
    """Reference-level counts giving a normalized ``value`` the numerator error ``sigma``."""
    return value / sigma**2


def bell_plan(
    settings,
    base_rate: float,
    noise_rate: float,
    integration_time: float,
    seed: int,
    floor: float = 0.0,
    reference_time: float | None = None,
) -> ExperimentPlan:
    """Plan with the four CH74 settings in the order A0B0, A0B1, A1B0, A1B1."""
    pairs = tuple(settings.pair(i, j) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    return ExperimentPlan(
        kind=Kind.TWO_PHOTON,
        base_rate=base_rate,
        noise_rate=noise_rate,
        integration_time=integration_time,
        settings=pairs,
        rng_seed=seed,
        floor=floor,
        reference_time=reference_time,
    )


class PhaseFit(NamedTuple):
    offset: float
    residual: float
    stderr: float | None


def _model(phases: np.ndarray, a: float, b: float, d: int, offset: float) -> np.ndarray:
    return np.array([bessel_j(d, graf_compose(RfDrive(a, float(p) + offset), RfDrive(b, 0.0)).amplitude) ** 2 for p in phases])


def phase_offset_residual(phases, values, model_amplitudes: tuple[float, float], d: int, offset: float, weights=None) -> float:
    """Sum of (weighted) squared deviations from ``J_d(C(phase + offset))^2``."""
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=float)
    model = _model(phases, *model_amplitudes, d, offset)
    return float(np.sum(w * (values - model) ** 2))


def fit_phase_offset(
    phases,
    values,
    model_amplitudes: tuple[float, float],
    d: int = 0,
    sigmas=None,
    grid_points: int = 256,
) -> PhaseFit:
    """Least-squares horizontal offset of a measured interference pattern.

    Minimizes ``sum w (value - J_d(C(phase + offset))^2)^2`` with ``w = 1`` or
    ``1/sigma^2``. A coarse grid over (-pi, pi] picks the basin, then
    successive parabolic steps refine it. ``stderr`` comes from the
    curvature of the weighted objective and is ``None`` without ``sigmas``.
    """
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(phases) < 3 or len(phases) != len(values):
        raise DomainError("need at least three (phase, value) points")
    a, b = model_amplitudes
    if a == 0 or b == 0:
        raise UndefinedResultError("model does not depend on the phase offset")
    weights = None if sigmas is None else 1.0 / np.asarray(sigmas, dtype=float) ** 2

    def objective(offset: float) -> float:
        return phase_offset_residual(phases, values, model_amplitudes, d, offset, weights)

    grid = np.linspace(-math.pi, math.pi, grid_points, endpoint=False)
    scores = np.array([objective(x) for x in grid])
    k = int(np.argmin(scores))
    step = grid[1] - grid[0]
    x0 = grid[k]
    for _ in range(60):
        f_minus, f0, f_plus = objective(x0 - step), objective(x0), objective(x0 + step)
        curvature = f_plus - 2.0 * f0 + f_minus
        if curvature <= 0:
            move = -step if f_minus < f_plus else step
        else:
            move = 0.5 * step * (f_minus - f_plus) / curvature
            move = max(-step, min(step, move))
        if objective(x0 + move) < f0:
            x0 += move
        step *= 0.5
        if step < 1e-12:
            break
    offset = wrap_phase(x0)
    residual = objective(offset)
    stderr = None
    if weights is not None:
        h = 1e-5
        # d2 chi^2 / d offset^2 = 2 / sigma_offset^2
        second = (objective(offset + h) - 2.0 * residual + objective(offset - h)) / h**2
        stderr = math.sqrt(2.0 / second) if second > 0 else None
    return PhaseFit(offset, residual, stderr)
