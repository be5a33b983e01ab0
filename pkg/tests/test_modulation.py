import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqbin.bessel import bessel_j
from freqbin.errors import DomainError, TruncationError
from freqbin.modulation import (
    OFF,
    BinWindow,
    PropagationSegment,
    RfDrive,
    absorb_propagation,
    adequate_window,
    build_unitary,
    graf_compose,
    propagation_phase,
    unitary_element,
    unitary_row,
    wrap_phase,
)
from oracles import bessel_series, convolution_amplitude

amplitudes = st.floats(min_value=0.0, max_value=5.0)
phases = st.floats(min_value=-math.pi, max_value=math.pi)
drives = st.builds(RfDrive, amplitudes, phases)


def test_unitary_element_example():
    value = unitary_element(RfDrive(1.2, math.pi / 2), 1)
    assert value.imag == pytest.approx(0.0, abs=1e-15)
    assert value.real == pytest.approx(bessel_series(1, 1.2), abs=1e-14)
    assert value.real > 0


def test_interior_columns_of_truncated_unitary_are_normalized():
    window = BinWindow(16)
    u = build_unitary(RfDrive(2.25, 0.3), window)
    for n in range(-3, 4):
        assert u.column_norm(n) >= 1 - 1e-10


def test_truncated_unitary_is_nearly_unitary_in_interior():
    window = BinWindow(40)
    u = build_unitary(RfDrive(3.0, -1.1), window).entries
    gram = u.conj().T @ u
    inner = slice(window.index(-20), window.index(20) + 1)
    assert np.allclose(gram[inner, inner], np.eye(41), atol=1e-12)


def test_window_too_small_raises():
    with pytest.raises(TruncationError):
        build_unitary(RfDrive(8.0, 0.0), BinWindow(12))
    assert adequate_window(8.0).n_max >= 18


def test_window_validation():
    with pytest.raises(DomainError):
        BinWindow(10, rf_frequency=1e9, filter_width=2e9)
    w = BinWindow(5)
    assert list(w.bins) == list(range(-5, 6))
    with pytest.raises(TruncationError):
        w.index(6)
    assert w.bin_frequency(1) - w.bin_frequency(0) == pytest.approx(25e9)


@settings(max_examples=200)
@given(drives, drives, st.integers(min_value=-10, max_value=10))
def test_graf_identity(a, b, d):
    composed = graf_compose(a, b)
    row_a, row_b = unitary_row(a, 60), unitary_row(b, 80)
    p = np.arange(-60, 61)
    series = np.sum(row_a[p + 60] * row_b[d - p + 80])
    assert abs(series - unitary_element(composed, d)) < 1e-10


def test_graf_identity_against_oracle_convolution():
    a, b = RfDrive(1.3, 0.4), RfDrive(2.1, -2.0)
    composed = graf_compose(a, b)
    for d in (-3, 0, 2, 5):
        assert abs(convolution_amplitude(1.3, 0.4, 2.1, -2.0, d) - unitary_element(composed, d)) < 1e-12


@given(drives, drives)
def test_graf_symmetric_and_triangle(a, b):
    ab, ba = graf_compose(a, b), graf_compose(b, a)
    assert ab.amplitude == pytest.approx(ba.amplitude, abs=1e-12)
    assert abs(a.amplitude - b.amplitude) - 1e-12 <= ab.amplitude <= a.amplitude + b.amplitude + 1e-12


@given(drives, drives, phases)
def test_graf_common_phase_shift(a, b, theta):
    base = graf_compose(a, b)
    moved = graf_compose(a.shifted(theta), b.shifted(theta))
    assert moved.amplitude == pytest.approx(base.amplitude, abs=1e-12)
    if base.amplitude > 1e-6:
        assert abs(wrap_phase(moved.phase - base.phase - theta)) < 1e-8


def test_graf_exact_cancellation():
    c = graf_compose(RfDrive(2.25, math.pi), RfDrive(2.25, 0.0))
    assert c.amplitude == 0.0 and c.phase == 0.0
    assert graf_compose(RfDrive(1.0, 0.2), OFF) == RfDrive(1.0, 0.2)


def test_drive_normalizes_negative_amplitude():
    d = RfDrive(-1.0, 0.0)
    assert d.amplitude == 1.0
    assert d.phase == pytest.approx(math.pi)


@given(st.floats(min_value=-50, max_value=50))
def test_wrap_phase_range(x):
    w = wrap_phase(x)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(x), abs=1e-9)


@given(drives, st.floats(min_value=0, max_value=1e3), st.floats(min_value=0, max_value=1e-8))
def test_propagation_commutes_into_drive_phase(drive, length, slope):
    window = BinWindow(30)
    segment = PropagationSegment(length, slope)
    p = propagation_phase(segment, window).entries
    u = build_unitary(drive, window).entries
    shifted = build_unitary(absorb_propagation(drive, segment, window), window).entries
    assert np.allclose(p @ u, shifted @ p, atol=1e-12)


def test_propagation_phase_value():
    window = BinWindow(12)
    segment = PropagationSegment(1000.0, 4.9e-9)
    delta = segment.phase_per_bin(window)
    assert delta == pytest.approx(4.9e-9 * 2 * math.pi * 25e9 * 1000.0)
    diag = np.diag(propagation_phase(segment, window).entries)
    assert diag[window.index(0)] == 1
    assert np.angle(diag[window.index(1)]) == pytest.approx(wrap_phase(delta), abs=1e-9)
    with pytest.raises(DomainError):
        PropagationSegment(-1.0)


def test_off_drive_is_identity():
    window = BinWindow(10)
    assert np.allclose(build_unitary(OFF, window).entries, np.eye(21))
    assert unitary_element(OFF, 0) == 1 and bessel_j(4, 0.0) == 0


def test_long_fibre_phase_keeps_precision():
    window = BinWindow(40)
    segment = PropagationSegment(1e4, 4.9e-9)
    assert segment.phase_per_bin(window) > 1e6
    drive = RfDrive(2.0, 0.4)
    p = propagation_phase(segment, window).entries
    lhs = p @ build_unitary(drive, window).entries
    rhs = build_unitary(absorb_propagation(drive, segment, window), window).entries @ p
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_small_window_accepted_when_tail_is_negligible():
    u = build_unitary(RfDrive(0.275, 0.0), BinWindow(8))
    assert u.element(0, 0) == pytest.approx(bessel_j(0, 0.275), abs=1e-15)
    assert u.element(3, 1) == pytest.approx(unitary_element(RfDrive(0.275, 0.0), 2), abs=1e-15)
