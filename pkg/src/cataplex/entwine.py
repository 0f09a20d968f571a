r"""Lattice checks of the operator identities obeyed by the entwining kernel.

On a periodic chain of ``n`` sites with spacing ``a`` the kernel is
``S = exp(i A)`` with

.. math::
    A = \sum_j \phi_j(\psi_{j+1}-\psi_j) + a\sum_j \mathfrak F_{pot}(\phi_j, \psi_j, z).

Momenta act as ``-i a^{-1} d/d phi_j``, so on ``S`` they multiply by
``g_j = a^{-1} dA/d phi_j``.  All derivatives of ``A`` are taken in closed
form; the only finite differences are the spatial ones built into the
densities.  Residuals are reported divided by ``S``.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass

import numpy as np

from . import backlund as bk
from .backlund import ModelKind
from .errors import DomainError, Overflow


@dataclass(frozen=True)
class Lattice:
    """Periodic chain; periodicity is what lets total differences sum to zero."""

    n_sites: int
    spacing: float

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError("n_sites must be an integer >= 2")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def periodic(self) -> bool:
        return True

    @property
    def length(self) -> float:
        return self.n_sites * self.spacing


@dataclass(frozen=True)
class LatticePair:
    lattice: Lattice
    phi: np.ndarray
    psi: np.ndarray
    z: float

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if phi.shape != (self.lattice.n_sites,) or psi.shape != phi.shape:
            raise ValueError("phi and psi need one value per site")
        if not np.isscalar(self.z) and np.ndim(self.z) != 0:
            raise ValueError("z is a single number shared by all sites")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "z", float(self.z))

    def shifted(self, k: int) -> "LatticePair":
        return LatticePair(self.lattice, np.roll(self.phi, k), np.roll(self.psi, k), self.z)


def _central(f, a):
    return (np.roll(f, -1) - np.roll(f, 1)) / (2 * a)


def _second(f, a):
    return (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / (a * a)


def kernel_action(model: ModelKind, pair: LatticePair) -> complex:
    """``A``; real for real fields, returned as complex."""
    a = pair.lattice.spacing
    with np.errstate(over="raise"):
        try:
            duality = np.sum(pair.phi * (np.roll(pair.psi, -1) - pair.psi))
            local = a * np.sum(bk.generator_potential(model, pair.phi, pair.psi, pair.z))
        except FloatingPointError as exc:
            raise Overflow("kernel action overflows") from exc
    return complex(duality + local)


def kernel(model: ModelKind, pair: LatticePair) -> complex:
    """``S = exp(i A)``."""
    return complex(np.exp(1j * kernel_action(model, pair)))


def kernel_gradients(model: ModelKind, pair: LatticePair):
    """``(dA/dphi_j, dA/dpsi_j)`` in closed form."""
    a = pair.lattice.spacing
    phi, psi, z = pair.phi, pair.psi, pair.z
    d_phi = (np.roll(psi, -1) - psi) + a * bk.w_phi(model, phi, psi, z)
    d_psi = (np.roll(phi, 1) - phi) + a * bk.w_psi(model, phi, psi, z)
    return d_phi, d_psi


def _momenta(model, pair):
    a = pair.lattice.spacing
    d_phi, d_psi = kernel_gradients(model, pair)
    return d_phi / a, d_psi / a


def momentum_densities(model: ModelKind, pair: LatticePair):
    """``(D phi_j g_j^phi, D psi_j g_j^psi)`` with central differences ``D``."""
    a = pair.lattice.spacing
    g_phi, g_psi = _momenta(model, pair)
    return _central(pair.phi, a) * g_phi, _central(pair.psi, a) * g_psi


def momentum_entwine_residual(model: ModelKind, pair: LatticePair) -> float:
    """``|(P_phi + P_psi) S| / |S|`` for the lattice total momenta."""
    a = pair.lattice.spacing
    p_phi, p_psi = momentum_densities(model, pair)
    return float(abs(a * np.sum(p_phi + p_psi)))


def _hamiltonians(model, pair):
    a = pair.lattice.spacing
    phi, psi, z = pair.phi, pair.psi, pair.z
    g_phi, g_psi = _momenta(model, pair)
    # -(1/2a^2) d^2 S / d phi_j^2 = (g^2/2 - (i/2a^2) d^2A/dphi_j^2) S
    curvature = bk.generator_curvature(model, phi, psi, z)
    kinetic_phi = 0.5 * g_phi ** 2 - 0.5j * curvature / a
    kinetic_psi = 0.5 * g_psi ** 2 - 0.5j * curvature / a
    h_phi = kinetic_phi + 0.5 * _central(phi, a) ** 2 + bk.potential(model, phi)
    h_psi = kinetic_psi + 0.5 * _central(psi, a) ** 2 + bk.potential(model, psi)
    return h_phi, h_psi


def energy_entwine_residual(model: ModelKind, pair: LatticePair, site: int | None = None):
    """Per-site ``[(H_phi - H_psi) S - S (F_{j+1} - F_{j-1}) / 2a] / S``.

    Returns the array over all sites, or the entry at ``site``.
    """
    a = pair.lattice.spacing
    h_phi, h_psi = _hamiltonians(model, pair)
    flux = bk.flux_term(model, pair.phi, pair.psi, pair.z)
    residual = h_phi - h_psi - _central(flux, a)
    if site is None:
        return residual
    return complex(residual[site % pair.lattice.n_sites])


def improved_entwine_residual(model: ModelKind, pair: LatticePair, chirality: int = 1) -> complex:
    """Global residual of the improved energy identity for ``chirality = +1`` or ``-1``.

    The left side carries ``H_phi - D^2 phi +- (P_phi - D g^phi)``, the right
    side ``H_psi + D g^psi -+ (P_psi +- D^2 psi)``.  Summed over the periodic
    chain; no separate total-difference term is subtracted.
    """
    if chirality not in (1, -1):
        raise ValueError("chirality must be +1 or -1")
    s = chirality
    a = pair.lattice.spacing
    h_phi, h_psi = _hamiltonians(model, pair)
    g_phi, g_psi = _momenta(model, pair)
    p_phi, p_psi = momentum_densities(model, pair)
    lhs = h_phi - _second(pair.phi, a) + s * (p_phi - _central(g_phi, a))
    rhs = h_psi + _central(g_psi, a) - s * (p_psi + s * _second(pair.psi, a))
    return complex(a * np.sum(lhs - rhs))


# --------------------------------------------------------------------------
# configurations


class Lcg64:
    """64-bit linear congruential generator.

    ``state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64``;
    a uniform draw on ``[0, 1)`` is ``(state >> 11) * 2^-53``.
    """

    MULTIPLIER = 6364136223846793005
    INCREMENT = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = int(seed) & self.MASK

    def next_u64(self) -> int:
        self.state = (self.MULTIPLIER * self.state + self.INCREMENT) & self.MASK
        return self.state

    def uniform(self, n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        draws = [(self.next_u64() >> 11) * 2.0 ** -53 for _ in range(n)]
        return lo + (hi - lo) * np.array(draws)


def seed_for(seed: int, index: int) -> int:
    """Independent per-configuration seed, so sweeps can run in any order."""
    return (int(seed) + 0x9E3779B97F4A7C15 * (index + 1)) & Lcg64.MASK


def random_pair(lattice: Lattice, z: float, seed: int, index: int = 0) -> LatticePair:
    """Sites drawn uniformly from ``[-1, 1]``: all of ``phi``, then all of ``psi``."""
    rng = Lcg64(seed_for(seed, index))
    phi = rng.uniform(lattice.n_sites)
    psi = rng.uniform(lattice.n_sites)
    return LatticePair(lattice, phi, psi, z)


def constant_pair(lattice: Lattice, phi: float, psi: float, z: float) -> LatticePair:
    n = lattice.n_sites
    return LatticePair(lattice, np.full(n, float(phi)), np.full(n, float(psi)), z)


def smooth_pair(lattice: Lattice, z: float, amplitude: float = 0.5) -> LatticePair:
    """Two low Fourier modes per field on the chain's physical length.

    A single mode per field makes the momentum sum vanish by symmetry.
    """
    x = 2 * np.pi * np.arange(lattice.n_sites) / lattice.n_sites
    phi = amplitude * (np.sin(x + 0.3) + 0.4 * np.cos(2 * x))
    psi = amplitude * (0.8 * np.cos(x - 0.2) + 0.2 * np.sin(3 * x + 1))
    return LatticePair(lattice, phi, psi, z)


def gradient_oracle_error(model: ModelKind, pair: LatticePair, h: float = 1e-4) -> float:
    """Max relative gap between closed-form gradients and central differences of ``A``."""
    d_phi, d_psi = kernel_gradients(model, pair)
    exact = np.concatenate([d_phi, d_psi])
    fields = np.concatenate([pair.phi, pair.psi])
    n = pair.lattice.n_sites
    numeric = np.empty_like(exact)
    for k in range(2 * n):
        up, down = fields.copy(), fields.copy()
        up[k] += h
        down[k] -= h
        a_up = kernel_action(model, LatticePair(pair.lattice, up[:n], up[n:], pair.z)).real
        a_down = kernel_action(model, LatticePair(pair.lattice, down[:n], down[n:], pair.z)).real
        numeric[k] = (a_up - a_down) / (2 * h)
    return float(np.max(np.abs(numeric - exact)) / max(1.0, float(np.max(np.abs(exact)))))


@dataclass(frozen=True)
class RefinementRow:
    spacing: float
    residual: float
    order: float


RESIDUALS = {
    "momentum": lambda m, p: momentum_entwine_residual(m, p),
    "energy": lambda m, p: float(np.max(np.abs(energy_entwine_residual(m, p)))),
    "improved+": lambda m, p: abs(improved_entwine_residual(m, p, 1)),
    "improved-": lambda m, p: abs(improved_entwine_residual(m, p, -1)),
}


def refinement_study(
    model: ModelKind, kind: str, sites=(32, 64, 128, 256), length: float = 8.0, z: float = 0.3
) -> list[RefinementRow]:
    """Residual of ``kind`` for a smooth mode at fixed physical length.

    ``order`` is the slope against the previous row (NaN for the first).
    """
    if kind not in RESIDUALS:
        raise ValueError(f"unknown identity {kind!r}")
    rows = []
    for n in sites:
        lattice = Lattice(n, length / n)
        r = RESIDUALS[kind](model, smooth_pair(lattice, z))
        if rows and rows[-1].residual > 0 and r > 0:
            order = math.log(rows[-1].residual / r) / math.log(rows[-1].spacing / lattice.spacing)
        else:
            order = math.nan
        rows.append(RefinementRow(lattice.spacing, r, order))
    return rows


# --------------------------------------------------------------------------
# free-field limit

_CONTEXT = decimal.Context(prec=60)


def free_field_limit(w: float, sample) -> float:
    """``|F_pot(phi, phi' - w, -w) - e^phi sinh phi'|`` for the Liouville row.

    Formed in 60-digit decimal arithmetic since both terms agree closely.
    """
    if w < 0:
        raise DomainError("w must be nonnegative")
    phi, prime = (decimal.Decimal(repr(float(v))) for v in sample)
    w = decimal.Decimal(repr(float(w)))
    half = decimal.Decimal("0.5")
    ex = _CONTEXT.exp
    with decimal.localcontext(_CONTEXT):
        psi, z = prime - w, -w
        density = half * (ex(-z + phi + psi) - ex(z - phi + psi) - ex(z + phi - psi))
        limit = ex(phi) * half * (ex(prime) - ex(-prime))
        gap = abs(density - limit)
    return float(gap)


def free_field_remainder(w: float, sample) -> float:
    """Closed form ``exp(phi' - phi - 2w)/2`` of the free-field discrepancy."""
    phi, prime = sample
    return 0.5 * math.exp(prime - phi - 2 * w)
