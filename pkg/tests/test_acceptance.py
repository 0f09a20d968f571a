"""Acceptance criteria, one marked group per criterion.

The terminal summary prints a PASS/FAIL line for each group.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from cataplex import cli
from cataplex.backlund import (
    BacklundParams,
    FieldSlice,
    ModelKind,
    contract_to_liouville,
    contraction_remainder,
    eom_residual,
    kink_profile,
    solve_backlund,
)
from cataplex.bessel import k_imag
from cataplex.entwine import (
    Lattice,
    constant_pair,
    energy_entwine_residual,
    free_field_limit,
    free_field_remainder,
    gradient_oracle_error,
    improved_entwine_residual,
    momentum_entwine_residual,
    random_pair,
    refinement_study,
)
from cataplex.errors import NonConvergence
from cataplex.liouville import (
    WavePacket,
    free_particle_gap,
    free_particle_limit,
    propagator_closed_form,
    schrodinger_residual,
    smeared_completeness,
    smeared_orthonormality,
    spectral_propagator,
    verify_macdonald,
    verify_sister,
)
from cataplex.timemap import (
    ContourKind,
    classify_contour,
    euclidean_T_series,
    real_axis_zeros,
    trace_level_contour,
)

MODELS = list(ModelKind)
c = pytest.mark.criterion


@c(1, "Macdonald identity, 48 points, residual < 1e-6 within 60 s")
def test_macdonald_identity():
    start = time.perf_counter()
    worst = max(
        verify_macdonald(x, y, mu)
        for x, y in itertools.product((-2, -1, 0, 1), repeat=2)
        for mu in (0.5, 1, 2)
    )
    elapsed = time.perf_counter() - start
    print(f"max residual {worst:.2e} in {elapsed:.1f} s")
    assert worst < 1e-6
    assert elapsed < 60


@c(2, "sister identity residual < 1e-5")
@pytest.mark.parametrize("x, y, nu", [(-1, 1, 0), (-1, 1, 0.5), (0, 2, 1)])
def test_sister_identity(x, y, nu):
    assert verify_sister(x, y, nu) < 1e-5


@c(3, "spectral propagator within 1e-4 relative, cutoff doubling below 1e-5")
def test_spectral_propagator_grid():
    for x, y, z in itertools.product((-1, 0, 1), repeat=3):
        exact = propagator_closed_form(x, y, z)[1]
        value, e_max, _, _ = spectral_propagator(x, y, z, full_output=True)
        assert abs(value - exact) < 1e-4 * exact
        doubled = spectral_propagator(x, y, z, e_max=2 * e_max)
        assert abs(doubled - value) < 1e-5 * exact


PACKET_PAIRS = [
    (WavePacket(2.0, 0.3), WavePacket(2.0, 0.3)),
    (WavePacket(2.0, 0.3), WavePacket(2.5, 0.3)),
    (WavePacket(1.0, 0.2), WavePacket(1.2, 0.2)),
    (WavePacket(4.0, 0.5), WavePacket(4.0, 0.5)),
    (WavePacket(3.0, 0.4), WavePacket(5.0, 0.4)),
]

COMPLETENESS_CASES = [
    (lambda y: np.exp(-2 * y ** 2), 0.0),
    (lambda y: np.exp(-2 * y ** 2), -1.0),
    (lambda y: np.exp(-((y + 1) ** 2)), 0.3),
    (lambda y: y * np.exp(-2 * (y + 0.5) ** 2), -0.5),
    (lambda y: np.exp(-2 * (y - 0.5) ** 2), 0.5),
]


@c(4, "smeared orthonormality within 1e-6 and completeness within 1e-3")
@pytest.mark.parametrize("g, h", PACKET_PAIRS, ids=[f"{g.center}-{h.center}" for g, h in PACKET_PAIRS])
def test_smeared_orthonormality(g, h):
    lhs, rhs = smeared_orthonormality(g, h)
    assert abs(lhs - rhs) < 1e-6


@c(4, "smeared orthonormality within 1e-6 and completeness within 1e-3")
@pytest.mark.parametrize("f, x", COMPLETENESS_CASES, ids=["gauss-0", "gauss-m1", "shifted-0.3", "odd-m0.5", "gauss-0.5"])
def test_smeared_completeness(f, x):
    assert abs(smeared_completeness(f, x) - float(f(np.array(x)))) < 1e-3


@c(5, "deep-Euclidean series at (1, 3): order 3 within 1e-3, errors decreasing")
def test_deep_euclidean_series():
    exact = -math.log(k_imag(1.0, math.exp(3.0)))
    errors = [abs(euclidean_T_series(1.0, 3.0, k) - exact) for k in range(4)]
    assert errors[3] / exact < 1e-3
    assert errors[0] > errors[1] > errors[2]


@c(6, "eigenfunction residual order 2.0 +- 0.2 at 5 energies x 7 positions")
def test_eigenfunction_residual_order():
    for E in (0.25, 0.5, 1.0, 2.0, 4.0):
        for x in (-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0):
            order = math.log2(schrodinger_residual(E, x, 2e-2) / schrodinger_residual(E, x, 1e-2))
            assert abs(order - 2.0) < 0.2, (E, x, order)


def _closed_contour(E, step):
    zero = real_axis_zeros(E, -8.0, 0.0)[-1]
    return trace_level_contour(E, zero + 0.3, step, 4000)


@c(7, "contours hold |K| to 1e-8, stable closure, monotone phase")
@pytest.mark.parametrize("E", [0.5, 1.0, 2.0])
def test_contour_tracer(E):
    coarse, fine = _closed_contour(E, 0.05), _closed_contour(E, 0.025)
    for contour in (coarse, fine):
        assert np.max(np.abs(contour.modulus - contour.level)) / contour.level < 1e-8
        steps = np.diff(contour.phase)
        assert np.all(steps > 0) or np.all(steps < 0)
    assert classify_contour(coarse) is classify_contour(fine) is ContourKind.CLOSED


@c(8, "sine-Gordon kink to 1e-8, EOM below 1e-6, cosh z rescaling to 1e-6")
def test_backlund_kink():
    sigma = np.linspace(-5, 5, 10001)
    vacuum = FieldSlice.vacuum(sigma)
    kink = solve_backlund(ModelKind.SINE_GORDON, vacuum, BacklundParams(0.0, float(kink_profile(-5.0))))
    assert np.max(np.abs(kink.phi - kink_profile(sigma))) < 1e-8
    assert eom_residual(ModelKind.SINE_GORDON, kink) < 1e-6
    z = 0.7
    boosted = solve_backlund(ModelKind.SINE_GORDON, vacuum, BacklundParams(z, float(kink_profile(-5.0 * math.cosh(z)))))
    rescaled = np.interp(sigma * math.cosh(z), sigma, kink.phi)
    inside = np.abs(sigma * math.cosh(z)) <= 5
    assert np.max(np.abs(boosted.phi[inside] - rescaled[inside])) < 1e-6


@c(9, "lattice entwining: constant fields exact, refinement orders, gradient oracle")
@pytest.mark.parametrize("model", MODELS)
def test_lattice_entwining(model):
    lattice = Lattice(16, 0.25)
    for values in ((0.0, 0.0), (0.4, -0.7), (-1.0, 1.0)):
        pair = constant_pair(lattice, *values, 0.3)
        assert momentum_entwine_residual(model, pair) == 0.0
        # exact up to roundoff in the algebraic cancellation
        assert np.max(np.abs(energy_entwine_residual(model, pair))) < 1e-12
        assert abs(improved_entwine_residual(model, pair, 1)) < 1e-12
        assert abs(improved_entwine_residual(model, pair, -1)) < 1e-12
    assert refinement_study(model, "energy")[-1].order >= 1.0 - 0.1
    assert abs(refinement_study(model, "momentum")[-1].order - 2.0) < 0.2
    small = Lattice(8, 0.3)
    assert max(gradient_oracle_error(model, random_pair(small, 0.2, 2024, i)) for i in range(100)) < 1e-6


@c(10, "contraction and limit discrepancies follow their exact decay laws")
def test_contraction_and_limits():
    for w in (0.0, 1.0, 3.0, 5.0):
        for sample in itertools.product((-1.0, 0.0, 1.0), repeat=3):
            gap = contract_to_liouville(w, sample)
            law = contraction_remainder(w, sample)
            assert abs(gap / law - 1) < 1e-10
            if w == 5.0:
                assert gap < 1e-6
    for offset in (-10.0, -12.0, -14.0):
        F, limit = free_particle_limit(0.3, 0.8, offset)
        law = 0.5 * math.exp(2 * offset - 0.3 - 0.8)
        assert abs(F - limit - law) < 1e-14 * F
        assert abs(free_particle_gap(0.3, 0.8, offset) / law - 1) < 1e-10
    for w in (2.0, 6.0, 10.0):
        assert abs(free_field_limit(w, (0.0, 0.0)) - 0.5 * math.exp(-2 * w)) < 1e-12 * math.exp(-2 * w)
        gap = free_field_limit(w, (0.4, -0.2))
        assert abs(gap / free_field_remainder(w, (0.4, -0.2)) - 1) < 1e-10


@c(11, "CLI determinism and exit codes")
def test_cli_contract(tmp_path, capsys, monkeypatch):
    argv = ["entwine", "--configs", "5", "--refine", "16,32", "--seed", "3", "--format", "json"]
    outputs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        assert cli.main(argv + ["--out", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["summary"]["failed"] == 0
    assert cli.main(["macdonald", "--x-grid", "0", "--y-grid", "0", "--mu", "1", "--tol", "1e-30"]) == 1
    assert cli.main(["macdonald", "--x-grid", "2:1:0"]) == 2

    def fail(args):
        raise NonConvergence("forced")

    monkeypatch.setitem(cli.COMMANDS, "contract", fail)
    assert cli.main(["contract"]) == 3
    capsys.readouterr()
