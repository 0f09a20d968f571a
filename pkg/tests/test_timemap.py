import math

import numpy as np
import pytest

from cataplex.bessel import k_complex, k_imag
from cataplex.errors import BesselZero, Degenerate, SaddlePoint
from cataplex.timemap import (
    Contour,
    ContourKind,
    ShellTime,
    classify_contour,
    euclidean_coefficient,
    euclidean_T_series,
    real_axis_zeros,
    t_of_z,
    trace_level_contour,
)


def test_shell_time_invariant():
    for E, z in [(1.0, 3.0), (0.5, complex(0.2, 0.5)), (2.0, complex(-0.5, -0.3))]:
        st = t_of_z(E, z)
        k = k_complex(1j * math.sqrt(E), complex(np.exp(z)))
        assert abs(np.exp(-1j * E * st.t) - k) < 1e-10 * abs(k)


def test_real_positive_k_gives_imaginary_time():
    st = t_of_z(1.0, 3.0)
    assert st.t.real == 0.0 and st.branch == 0


def test_deep_euclidean_time():
    st = t_of_z(1.0, 3.0)
    series = math.exp(3) + 1.5 - math.log(math.sqrt(math.pi / 2)) + 0.625 * math.exp(-3)
    assert abs(-st.t.imag - series) / series < 1e-2


def test_series_orders():
    assert euclidean_T_series(2.0, 1.5, 0) == math.exp(1.5) / 2.0
    exact = -math.log(k_imag(1.0, math.exp(3))) / 1.0
    errors = [abs(euclidean_T_series(1.0, 3.0, k) - exact) for k in range(4)]
    assert errors[0] > errors[1] > errors[2]
    for E in (0.5, 1.0, 2.0):
        assert euclidean_coefficient(E) == (1 + 4 * E) / 8
    with pytest.raises(ValueError):
        euclidean_T_series(1.0, 3.0, 4)


def test_series_error_scaling():
    # the order-3 error is driven by the omitted e^{-2z} term
    exact = lambda z: -math.log(k_imag(1.0, math.exp(z)))
    e1 = abs(euclidean_T_series(1.0, 3.0, 3) - exact(3.0))
    e2 = abs(euclidean_T_series(1.0, 4.0, 3) - exact(4.0))
    assert 0.5 * math.exp(2) < e1 / e2 < 2 * math.exp(2)


def test_branch_tracking_is_continuous():
    path = [complex(-2.0, 0.05) + 0.3 * np.exp(1j * a) for a in np.linspace(0, 2 * np.pi, 200)]
    prev = None
    times = []
    for z in path:
        prev = t_of_z(1.0, z, prev)
        times.append(prev.t)
    jumps = np.abs(np.diff(times))
    assert np.max(jumps) < 0.5


def test_bessel_zero_raises():
    zero = real_axis_zeros(1.0, -6.0, 0.0)[-1]
    with pytest.raises(BesselZero):
        t_of_z(1.0, zero)
    t_of_z(1.0, zero + 1e-3)


def _closed(E, step):
    zero = real_axis_zeros(E, -8.0, 0.0)[-1]
    return trace_level_contour(E, zero + 0.3, step, 3000)


def test_closed_contour_properties():
    c = _closed(1.0, 0.05)
    assert classify_contour(c) is ContourKind.CLOSED
    assert np.max(np.abs(c.modulus - c.level)) / c.level < 1e-8
    steps = np.diff(c.phase)
    assert np.all(steps > 0) or np.all(steps < 0)
    assert c.winding == round(c.winding)


def test_large_real_seed_is_open():
    c = trace_level_contour(1.0, 3.0, 0.05, 60)
    assert classify_contour(c) is ContourKind.OPEN


def test_saddle_point_rejected():
    # on the real axis between two zeros |K| has a stationary point
    zeros = real_axis_zeros(1.0, -8.0, 0.0)
    from scipy.optimize import brentq

    from cataplex.timemap import _evaluate

    slope = lambda s: _evaluate(1.0, complex(s)).__getitem__(1).real
    s0 = brentq(slope, zeros[-2] + 1e-3, zeros[-1] - 1e-3, xtol=1e-15)
    with pytest.raises(SaddlePoint):
        trace_level_contour(1.0, s0, 0.05, 10)


def test_single_point_contour_is_degenerate():
    c = Contour(1.0, 1.0, 0.1, np.array([0j]), np.ones(1), np.zeros(1), np.zeros(1, dtype=int))
    with pytest.raises(Degenerate):
        classify_contour(c)
