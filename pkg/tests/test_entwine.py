import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cataplex.backlund import ModelKind
from cataplex.entwine import (
    Lattice,
    LatticePair,
    Lcg64,
    constant_pair,
    energy_entwine_residual,
    free_field_limit,
    free_field_remainder,
    gradient_oracle_error,
    improved_entwine_residual,
    kernel,
    kernel_action,
    kernel_gradients,
    momentum_entwine_residual,
    random_pair,
    refinement_study,
    seed_for,
    smooth_pair,
)
from cataplex.errors import DomainError, Overflow

MODELS = list(ModelKind)
LAT = Lattice(16, 0.25)


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice(1, 0.1)
    with pytest.raises(ValueError):
        Lattice(4, 0.0)
    with pytest.raises(ValueError):
        LatticePair(LAT, np.zeros(3), np.zeros(16), 0.0)
    assert LAT.periodic and LAT.length == 4.0


def test_lcg_reference_stream():
    rng = Lcg64(0)
    assert rng.next_u64() == 1442695040888963407
    assert rng.next_u64() == (6364136223846793005 * 1442695040888963407 + 1442695040888963407) % 2 ** 64
    draws = Lcg64(42).uniform(1000)
    assert np.all((draws >= -1) & (draws < 1))
    assert seed_for(0, 0) == 0x9E3779B97F4A7C15


def test_random_pairs_are_reproducible_and_distinct():
    a, b = random_pair(LAT, 0.1, 5, 3), random_pair(LAT, 0.1, 5, 3)
    assert np.array_equal(a.phi, b.phi) and np.array_equal(a.psi, b.psi)
    assert not np.array_equal(a.phi, random_pair(LAT, 0.1, 5, 4).phi)


def test_liouville_action_at_zero():
    pair = constant_pair(LAT, 0.0, 0.0, 0.0)
    assert kernel_action(ModelKind.LIOUVILLE, pair) == -16 * 0.25 / 2
    d_phi, _ = kernel_gradients(ModelKind.LIOUVILLE, pair)
    assert np.allclose(d_phi / LAT.spacing, 0.5, rtol=0, atol=1e-15)


def test_constant_psi_drops_duality_term():
    phi = np.linspace(-1, 1, 16)
    pair = LatticePair(LAT, phi, np.full(16, 0.3), 0.2)
    from cataplex.backlund import generator_potential

    expected = LAT.spacing * np.sum(generator_potential(ModelKind.SINH_GORDON, phi, 0.3, 0.2))
    assert abs(kernel_action(ModelKind.SINH_GORDON, pair).real - expected) < 1e-14


@pytest.mark.parametrize("model", MODELS)
def test_kernel_is_unimodular_and_shift_invariant(model):
    for i in range(5):
        pair = random_pair(LAT, 0.4, 11, i)
        assert abs(abs(kernel(model, pair)) - 1) < 1e-14
        shifted = pair.shifted(3)
        assert abs(kernel_action(model, shifted) - kernel_action(model, pair)) < 1e-12
        g, gs = kernel_gradients(model, pair), kernel_gradients(model, shifted)
        assert np.allclose(np.roll(g[0], 3), gs[0], rtol=0, atol=1e-14)
        assert abs(momentum_entwine_residual(model, shifted) - momentum_entwine_residual(model, pair)) < 1e-12


def test_action_overflow():
    pair = constant_pair(LAT, 400.0, 400.0, 0.0)
    with pytest.raises(Overflow):
        kernel_action(ModelKind.LIOUVILLE, pair)


@pytest.mark.parametrize("model", MODELS)
def test_gradient_oracle(model):
    lat = Lattice(8, 0.3)
    worst = max(gradient_oracle_error(model, random_pair(lat, 0.2, 2024, i)) for i in range(100))
    assert worst < 1e-6


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("values", [(0.0, 0.0), (0.4, -0.7), (-1.0, 1.0)])
def test_constant_fields_satisfy_identities(model, values):
    pair = constant_pair(LAT, *values, 0.3)
    assert momentum_entwine_residual(model, pair) == 0.0
    assert np.max(np.abs(energy_entwine_residual(model, pair))) < 1e-12
    for s in (1, -1):
        assert abs(improved_entwine_residual(model, pair, s)) < 1e-12


def test_energy_site_accessor_wraps():
    pair = smooth_pair(LAT, 0.1)
    full = energy_entwine_residual(ModelKind.SINE_GORDON, pair)
    assert energy_entwine_residual(ModelKind.SINE_GORDON, pair, site=17) == full[1]


def test_improved_chiralities_sum_to_energy():
    pair = smooth_pair(Lattice(64, 0.125), 0.3)
    for model in MODELS:
        total = improved_entwine_residual(model, pair, 1) + improved_entwine_residual(model, pair, -1)
        energy = 0.125 * np.sum(energy_entwine_residual(model, pair))
        assert abs(total - 2 * energy) < 1e-9
    with pytest.raises(ValueError):
        improved_entwine_residual(ModelKind.LIOUVILLE, pair, 0)


@pytest.mark.parametrize("model", MODELS)
def test_momentum_converges_second_order(model):
    rows = refinement_study(model, "momentum")
    assert all(b.residual < a.residual for a, b in zip(rows, rows[1:]))
    assert rows[-1].order > 1.8


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("kind", ["energy", "improved+", "improved-"])
def test_energy_identities_converge(model, kind):
    rows = refinement_study(model, kind)
    assert math.isnan(rows[0].order)
    assert rows[-1].residual < rows[0].residual
    assert rows[-1].order >= 0.9


def test_refinement_rejects_unknown_identity():
    with pytest.raises(ValueError):
        refinement_study(ModelKind.LIOUVILLE, "virasoro")


def test_free_field_limit_law():
    assert abs(free_field_limit(3.0, (0.0, 0.0)) - 0.5 * math.exp(-6)) < 1e-15 * math.exp(-6)
    ratio = free_field_limit(4.0, (0.2, -0.3)) / free_field_limit(5.0, (0.2, -0.3))
    assert abs(ratio - math.exp(2)) < 1e-10
    with pytest.raises(DomainError):
        free_field_limit(-1.0, (0.0, 0.0))


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 20))
def test_free_field_remainder_closed_form(phi, prime, w):
    law = free_field_remainder(w, (phi, prime))
    assert abs(free_field_limit(w, (phi, prime)) - law) <= 1e-12 * law
