import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freqbin import bell, metrology
from freqbin.errors import DomainError, UndefinedResultError
from freqbin.interference import Kind
from freqbin.metrology import (
    APD_GATED,
    IDEAL,
    SSPD,
    CountRecord,
    DetectorModel,
    ExperimentPlan,
    bell_plan,
    bell_statistics,
    expected_rate,
    expected_visibility,
    fit_phase_offset,
    noise_model_for,
    simulate_counts,
    visibility,
    visibility_errors,
)
from freqbin.modulation import OFF, RfDrive

OPTIMAL = bell.optimal_settings(0.55)


def test_expected_rate_pattern():
    alice, bob = RfDrive(2.25, math.pi), RfDrive(2.25, 0.0)
    assert expected_rate(Kind.TWO_PHOTON, 20.0, 0.01, alice, bob) == pytest.approx(20.01)
    assert expected_rate("classical", 1.0, 0.0, OFF, OFF, d=1) == 0.0
    assert expected_rate(Kind.ONE_PHOTON, 10.0, 0.0, OFF, OFF, floor=0.1) == pytest.approx(10.0)
    with pytest.raises(DomainError):
        expected_rate(Kind.TWO_PHOTON, -1.0, 0.0, OFF, OFF)
    with pytest.raises(ValueError):
        expected_rate("three_photon", 1.0, 0.0, OFF, OFF)


def test_reference_statistics_match_poisson():
    plan = ExperimentPlan(base_rate=20.0, noise_rate=0.0, integration_time=300.0)
    counts = np.array([simulate_counts(ExperimentPlan(base_rate=20.0, noise_rate=0.0, rng_seed=s))[0].observed_counts for s in range(400)])
    assert plan.reference_duration == 300.0
    assert counts.mean() == pytest.approx(6000, abs=3 * math.sqrt(6000 / 400))
    assert counts.std(ddof=1) / 6000 == pytest.approx(0.0129, abs=0.002)


def test_simulation_is_deterministic_and_order_independent():
    pairs = tuple(OPTIMAL.pair(i, j) for i in (0, 1) for j in (0, 1))
    a = simulate_counts(ExperimentPlan(settings=pairs, rng_seed=5))
    b = simulate_counts(ExperimentPlan(settings=pairs, rng_seed=5))
    assert a == b
    reversed_run = simulate_counts(ExperimentPlan(settings=pairs[::-1], rng_seed=5))
    # stream keyed by position: setting 0 draws the same numbers whatever it is
    assert reversed_run[0] == a[0]
    single = simulate_counts(ExperimentPlan(settings=pairs[:1], rng_seed=5))
    assert single[1] == a[1]


def test_monte_carlo_mean_matches_expectation():
    alice, bob = RfDrive(1.0, 0.5), RfDrive(1.2, 0.0)
    plan_values = []
    for seed in range(200):
        records = simulate_counts(ExperimentPlan(settings=((alice, bob),), rng_seed=seed, base_rate=20.0, noise_rate=0.01))
        plan_values.append(records[1].normalized_value)
    values = np.array(plan_values)
    expected = expected_rate(Kind.TWO_PHOTON, 20, 0.01, alice, bob) / expected_rate(Kind.TWO_PHOTON, 20, 0.01, OFF, OFF)
    assert abs(values.mean() - expected) < 3 * values.std(ddof=1) / math.sqrt(len(values))


def test_zero_reference_gives_nan_record():
    records = simulate_counts(ExperimentPlan(base_rate=0.0, noise_rate=0.0, settings=((OFF, OFF),)))
    assert records[0].observed_counts == 0
    assert math.isnan(records[0].normalized_value) and math.isnan(records[1].normalized_value)


def test_plan_validation():
    with pytest.raises(DomainError):
        ExperimentPlan(integration_time=0)
    with pytest.raises(DomainError):
        ExperimentPlan(reference_time=-1.0)
    with pytest.raises(DomainError):
        metrology.setting_rng(0, -3)


def test_visibility_closed_forms():
    for n_max, nu in ((1000.0, 0.5), (6000.0, 3.0), (50.0, 0.0)):
        vis = visibility(n_max + nu, nu, nu)
        assert vis.raw == pytest.approx(1 / (1 + 2 * nu / n_max), abs=1e-12)
        assert vis.net == pytest.approx(1.0, abs=1e-12)
    assert expected_visibility(1 / 2000).raw == pytest.approx(0.9990, abs=1e-4)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1e6))
def test_visibility_bounds(a, b, nu):
    n_max, n_min = max(a, b), min(a, b)
    vis = visibility(n_max, n_min, nu)
    if vis.raw is not None:
        assert 0 <= vis.raw <= 1
    if vis.net is not None:
        assert vis.raw is not None and vis.net >= vis.raw - 1e-12


def test_visibility_undefined_cases():
    assert visibility(0, 0, 0) == (None, None)
    assert visibility(10, 1, 2).net is None
    assert visibility(5, 5, 5).net is None
    assert visibility_errors(0, 0) == (None, None)
    with pytest.raises(DomainError):
        visibility(-1, 0)


def test_visibility_error_matches_monte_carlo():
    rng = np.random.default_rng(3)
    mx, mn, nz = rng.poisson(6000, 4000), rng.poisson(200, 4000), rng.poisson(30, 4000)
    nets = np.array([visibility(a, b, c).net for a, b, c in zip(mx, mn, nz)])
    raws = (mx - mn) / (mx + mn)
    err = visibility_errors(6000, 200, 30)
    assert raws.std() == pytest.approx(err.raw, rel=0.1)
    assert nets.std() == pytest.approx(err.net, rel=0.1)


@pytest.mark.parametrize(
    "raw, net",
    [(0.9979, 0.9979), (0.9941, 0.9941), (0.8725, 0.9927), (0.9917, 0.9976)],
)
def test_measured_visibilities_are_expressible(raw, net):
    floor, noise = noise_model_for(raw, net)
    assert floor >= 0 and noise >= 0
    vis = expected_visibility(noise, floor)
    assert vis.raw == pytest.approx(raw, abs=1e-12)
    assert vis.net == pytest.approx(net, abs=1e-12)


def test_noise_model_validation():
    with pytest.raises(DomainError):
        noise_model_for(0.99, 0.98)


def test_detector_models():
    assert APD_GATED.single_noise_rate() == pytest.approx(0.75)
    assert APD_GATED.dark_probability_per_gate() == pytest.approx(7.5e-6)
    assert SSPD.coincidence_noise_rate(4.1e3, 4.1e3) == pytest.approx(0.6e-9 * 4130**2)
    assert IDEAL.coincidence_noise_rate(1e6, 1e6) == 0
    with pytest.raises(DomainError):
        DetectorModel(mode="gated")
    with pytest.raises(DomainError):
        DetectorModel(gate_rate=1.0)
    with pytest.raises(DomainError):
        SSPD.dark_probability_per_gate()
    with pytest.raises(DomainError):
        DetectorModel(efficiency=1.5)


def test_rf_power_conversion():
    assert metrology.rf_amplitude_from_power(0.0863) == pytest.approx(2.25, abs=2e-3)
    for a in (0.3, 2.25, 5.0):
        assert metrology.rf_amplitude_from_power(metrology.rf_power_from_amplitude(a)) == pytest.approx(a)
    with pytest.raises(DomainError):
        metrology.rf_amplitude_from_power(-1)


def _bell_records(seed, time=1190.0):
    records = simulate_counts(bell_plan(OPTIMAL, 20.0, 0.01, time, seed))
    return records[1:], records[0]


def test_bell_statistics_error_matches_monte_carlo():
    stats = [bell_statistics(*_bell_records(seed)) for seed in range(1000)]
    s = np.array([x.s_estimate for x in stats])
    sigma = np.mean([x.s_sigma for x in stats])
    assert s.std(ddof=1) == pytest.approx(sigma, rel=0.1)
    assert s.mean() == pytest.approx(bell.ch74_evaluate(OPTIMAL).s_value, abs=3 * sigma / math.sqrt(len(s)) + 2e-3)


def test_bell_sigma_scales_with_counts():
    setting_records, reference = _bell_records(1)
    scaled = [CountRecord(r.setting_index, r.expected_rate, r.duration, 4 * r.observed_counts, 0, 0) for r in setting_records]
    ref4 = CountRecord(-1, reference.expected_rate, reference.duration, 4 * reference.observed_counts, 1, 0)
    base, more = bell_statistics(setting_records, reference), bell_statistics(scaled, ref4)
    assert more.s_estimate == pytest.approx(base.s_estimate)
    assert more.s_sigma == pytest.approx(base.s_sigma / 2)


def test_bell_statistics_validation():
    setting_records, reference = _bell_records(0)
    with pytest.raises(DomainError):
        bell_statistics(setting_records[:3], reference)
    empty = CountRecord(-1, 0.0, 1.0, 0, math.nan, math.nan)
    with pytest.raises(UndefinedResultError):
        bell_statistics(setting_records, empty)


def test_component_sigma_roundtrip():
    k = metrology.counts_for_component_sigma(0.857, 0.006)
    assert k == pytest.approx(23806, rel=1e-3)
    assert metrology.component_sigma(0.857, k) == pytest.approx(0.006)
    assert metrology.component_sigma(0.182, k) == pytest.approx(0.0028, abs=1e-4)


def test_phase_offset_recovered_from_clean_data():
    phases = np.linspace(-math.pi, math.pi, 41)
    values = [bell.j0_squared(math.sqrt(2 * 2.25**2 * (1 + math.cos(p + 0.3)))) for p in phases]
    fit = fit_phase_offset(phases, values, (2.25, 2.25))
    assert fit.offset == pytest.approx(0.3, abs=1e-6)
    assert fit.residual < 1e-12 and fit.stderr is None


def test_phase_offset_pulls_are_standard_normal():
    phases = np.linspace(-math.pi, math.pi, 25)
    truth = -0.2
    pulls = []
    for seed in range(40):
        pairs = tuple((RfDrive(2.25, p + truth), RfDrive(2.25, 0.0)) for p in phases)
        records = simulate_counts(ExperimentPlan(settings=pairs, rng_seed=seed, noise_rate=0.0))[1:]
        values = [r.normalized_value for r in records]
        sigmas = [r.standard_error for r in records]
        fit = fit_phase_offset(phases, values, (2.25, 2.25), sigmas=sigmas)
        pulls.append((fit.offset - truth) / fit.stderr)
    pulls = np.array(pulls)
    assert abs(pulls.mean()) < 0.6
    assert 0.6 < pulls.std(ddof=1) < 1.6


def test_phase_fit_validation():
    with pytest.raises(DomainError):
        fit_phase_offset([0, 1], [1, 1], (1, 1))
    with pytest.raises(UndefinedResultError):
        fit_phase_offset([0, 1, 2], [1, 1, 1], (0, 1))


def test_rates_at_extremes_of_pattern():
    zero = bell.first_j0_zero()
    at_zero = (RfDrive(zero / 2, 0.0), RfDrive(zero / 2, 0.0))
    assert expected_rate(Kind.TWO_PHOTON, 20.0, 0.01, *at_zero) == pytest.approx(0.01, abs=1e-12)
    records = simulate_counts(ExperimentPlan(noise_rate=0.0, settings=(at_zero,), rng_seed=9))
    assert records[1].observed_counts == 0
    assert visibility(1, 0, 0) == (1.0, 1.0)


def test_rf_power_edge_and_monotone():
    assert metrology.rf_amplitude_from_power(0.0) == 0.0
    assert metrology.rf_amplitude_from_power(0.2) == pytest.approx(math.sqrt(2) * metrology.rf_amplitude_from_power(0.1))


def test_bell_statistics_noiseless_limit_reproduces_theory():
    theory = bell.ch74_evaluate(OPTIMAL)
    big = 1e15
    reference = CountRecord(-1, 1.0, 1.0, int(big), 1.0, 0.0)
    records = [CountRecord(k, v, 1.0, round(v * big), 0, 0) for k, v in enumerate(theory.component_values)]
    stats = bell_statistics(records, reference)
    assert stats.s_estimate == pytest.approx(theory.s_value, abs=1e-12)
    assert stats.s_sigma < 1e-6
    assert (2.389 - 2) / 0.021 == pytest.approx(18.5, abs=0.05)


def test_phase_residual_symmetric_under_reflection():
    phases = np.linspace(-math.pi, math.pi, 41)
    values = [bell.j0_squared(math.sqrt(2 * 2.25**2 * (1 + math.cos(p)))) for p in phases]
    for delta in (0.1, 0.5, 1.3):
        plus = metrology.phase_offset_residual(phases, values, (2.25, 2.25), 0, delta)
        minus = metrology.phase_offset_residual(phases, values, (2.25, 2.25), 0, -delta)
        assert plus == pytest.approx(minus, rel=1e-12)
