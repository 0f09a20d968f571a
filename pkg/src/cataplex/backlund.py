r"""Classical fixed-time Backlund maps for three two-dimensional field theories.

Each model is fixed by its potential ``V`` and a generator density

.. math::
    \mathfrak F = \phi\,\partial_\sigma\psi + \mathfrak F_{pot}(\phi, \psi, z),

whose first derivatives give the first-order relations

.. math::
    \pi_\phi = \partial_\sigma\psi + W_\phi, \qquad
    \pi_\psi = -\partial_\sigma\phi + W_\psi, \qquad
    W_\bullet = \partial_\bullet \mathfrak F_{pot}.

Given a seed ``(phi, pi_phi)`` on a grid, the first relation is an ODE for the
new field ``psi``; the second then supplies its momentum.
"""

from __future__ import annotations

import decimal
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, Overflow
from .numeric import Tolerance, solve_ivp


class ModelKind(enum.Enum):
    LIOUVILLE = "liouville"
    SINH_GORDON = "sinh-gordon"
    SINE_GORDON = "sine-gordon"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        key = name.strip().lower().replace("_", "-")
        for model in cls:
            if model.value == key or model.value.replace("-", "") == key:
                return model
        raise ValueError(f"unknown model {name!r}")


def potential(model: ModelKind, phi):
    phi = np.asarray(phi, dtype=float)
    if model is ModelKind.LIOUVILLE:
        return 0.5 * np.exp(2 * phi)
    if model is ModelKind.SINH_GORDON:
        return np.cosh(2 * phi)
    return -np.cos(2 * phi)


def potential_prime(model: ModelKind, phi):
    phi = np.asarray(phi, dtype=float)
    if model is ModelKind.LIOUVILLE:
        return np.exp(2 * phi)
    if model is ModelKind.SINH_GORDON:
        return 2 * np.sinh(2 * phi)
    return 2 * np.sin(2 * phi)


def generator_potential(model: ModelKind, phi, psi, z):
    """The non-derivative part ``F_pot(phi, psi, z)`` of the generator density."""
    phi, psi = np.asarray(phi, dtype=float), np.asarray(psi, dtype=float)
    with np.errstate(over="raise"):
        try:
            if model is ModelKind.LIOUVILLE:
                return 0.5 * (np.exp(-z + phi + psi) - np.exp(z - phi + psi) - np.exp(z + phi - psi))
            if model is ModelKind.SINH_GORDON:
                return np.exp(-z) * np.cosh(phi + psi) - np.exp(z) * np.cosh(phi - psi)
            return -np.exp(-z) * np.cos(phi + psi) + np.exp(z) * np.cos(phi - psi)
        except FloatingPointError as exc:
            raise Overflow("generator density overflows") from exc


def w_phi(model: ModelKind, phi, psi, z):
    """``d F_pot / d phi``."""
    if model is ModelKind.LIOUVILLE:
        return 0.5 * (np.exp(-z + phi + psi) + np.exp(z - phi + psi) - np.exp(z + phi - psi))
    if model is ModelKind.SINH_GORDON:
        return np.exp(-z) * np.sinh(phi + psi) - np.exp(z) * np.sinh(phi - psi)
    return np.exp(-z) * np.sin(phi + psi) - np.exp(z) * np.sin(phi - psi)


def w_psi(model: ModelKind, phi, psi, z):
    """``d F_pot / d psi``."""
    if model is ModelKind.LIOUVILLE:
        return 0.5 * (np.exp(-z + phi + psi) - np.exp(z - phi + psi) + np.exp(z + phi - psi))
    if model is ModelKind.SINH_GORDON:
        return np.exp(-z) * np.sinh(phi + psi) + np.exp(z) * np.sinh(phi - psi)
    return np.exp(-z) * np.sin(phi + psi) + np.exp(z) * np.sin(phi - psi)


def generator_curvature(model: ModelKind, phi, psi, z):
    """``d^2 F_pot / d phi^2``, which equals ``d^2 F_pot / d psi^2`` in every model."""
    if model is ModelKind.SINE_GORDON:
        return -generator_potential(model, phi, psi, z)
    return generator_potential(model, phi, psi, z)


def flux_term(model: ModelKind, phi, psi, z):
    """Density ``F`` whose gradient left over in the energy relation is ``d_sigma F``.

    It satisfies ``dF/dphi = W_psi`` and ``dF/dpsi = W_phi``.
    """
    if model is ModelKind.LIOUVILLE:
        return 0.5 * (np.exp(-z + phi + psi) + np.exp(z - phi + psi) + np.exp(z + phi - psi))
    if model is ModelKind.SINH_GORDON:
        return np.exp(-z) * np.cosh(phi + psi) + np.exp(z) * np.cosh(phi - psi)
    return -np.exp(-z) * np.cos(phi + psi) - np.exp(z) * np.cos(phi - psi)


def generator_density(model: ModelKind, phi, psi, dpsi, z):
    """``phi * dpsi + F_pot(phi, psi, z)``."""
    return phi * dpsi + generator_potential(model, phi, psi, z)


# --------------------------------------------------------------------------
# fixed-time slices


@dataclass(frozen=True)
class FieldSlice:
    """A field and its conjugate momentum on a uniform grid."""

    sigma: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        for name in ("sigma", "phi", "pi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.sigma.ndim == 1 and self.sigma.shape == self.phi.shape == self.pi.shape):
            raise ValueError("sigma, phi and pi must be 1-d arrays of equal length")
        if self.sigma.size < 5:
            raise ValueError("need at least 5 grid points")
        steps = np.diff(self.sigma)
        if steps[0] <= 0 or np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]) * self.sigma.size:
            raise ValueError("sigma must be uniform and increasing")

    @property
    def spacing(self) -> float:
        return float((self.sigma[-1] - self.sigma[0]) / (self.sigma.size - 1))

    @classmethod
    def vacuum(cls, sigma) -> "FieldSlice":
        sigma = np.asarray(sigma, dtype=float)
        return cls(sigma, np.zeros_like(sigma), np.zeros_like(sigma))


@dataclass(frozen=True)
class BacklundParams:
    z: float
    psi_left: float


BACKLUND_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-13)


def solve_backlund(
    model: ModelKind, seed: FieldSlice, params: BacklundParams, tol: Tolerance = BACKLUND_TOL
) -> FieldSlice:
    """New slice ``(psi, pi_psi)`` generated from ``seed`` at parameter ``z``.

    ``psi' = pi_phi - W_phi(phi, psi, z)`` is integrated from ``psi_left`` at
    the left grid end; the seed is interpolated by cubic splines between grid
    points.  Raises :class:`StepUnderflow` if ``psi`` blows up.
    """
    z = float(params.z)
    phi_s = CubicSpline(seed.sigma, seed.phi)
    pi_s = CubicSpline(seed.sigma, seed.pi)
    flat = not (np.any(seed.phi) or np.any(seed.pi))

    def rhs(s, y):
        if flat:
            return -w_phi(model, 0.0, y, z)
        return pi_s(s) - w_phi(model, phi_s(s), y, z)

    path = solve_ivp(rhs, [params.psi_left], (seed.sigma[0], seed.sigma[-1]), tol, t_eval=seed.sigma)
    psi = path.states[:, 0]
    dphi = phi_s(seed.sigma, 1)
    pi_psi = -dphi + w_psi(model, seed.phi, psi, z)
    return FieldSlice(seed.sigma, psi, pi_psi)


_STENCILS = {
    2: (np.array([1.0, -2.0, 1.0]), 1.0),
    4: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]), 12.0),
}


def eom_residual(model: ModelKind, field: FieldSlice, order: int = 4) -> float:
    """Sup-norm of ``phi'' - V'(phi)`` over interior points of a static slice.

    ``order`` selects the central-difference stencil (2 or 4).
    """
    if order not in _STENCILS:
        raise ValueError("order must be 2 or 4")
    if np.max(np.abs(field.pi)) > 1e-8:
        raise DomainError("static check needs pi = 0")
    weights, denom = _STENCILS[order]
    half = len(weights) // 2
    h = field.spacing
    phi = field.phi
    n = phi.size
    second = sum(w * phi[k : n - 2 * half + k] for k, w in enumerate(weights)) / (denom * h * h)
    residual = second - potential_prime(model, phi[half : n - half])
    return float(np.max(np.abs(residual)))


def kink_profile(sigma, z: float = 0.0):
    """Sine-Gordon one-soliton ``2 arctan(exp(-2 cosh(z) sigma))``."""
    return 2 * np.arctan(np.exp(-2 * math.cosh(z) * np.asarray(sigma, dtype=float)))


# --------------------------------------------------------------------------
# contraction to the Liouville generator

_CONTEXT = decimal.Context(prec=60)


def _dexp(v):
    return _CONTEXT.exp(v)


def contract_to_liouville(w: float, sample) -> float:
    """``|exp(-w) F_sinh(phi+w, psi+w, z+w) - F_Liouville(phi, psi, z)|``.

    The two sides agree to many digits for large ``w``, so the difference is
    formed in 60-digit decimal arithmetic.
    """
    if w < 0:
        raise DomainError("w must be nonnegative")
    phi, psi, z = (decimal.Decimal(repr(float(v))) for v in sample)
    w = decimal.Decimal(repr(float(w)))
    half = decimal.Decimal("0.5")
    try:
        with decimal.localcontext(_CONTEXT):
            p, m = phi + psi + 2 * w, phi - psi
            sinh_side = _dexp(-w) * (
                _dexp(-z - w) * half * (_dexp(p) + _dexp(-p)) - _dexp(z + w) * half * (_dexp(m) + _dexp(-m))
            )
            liouville = half * (_dexp(-z + phi + psi) - _dexp(z - phi + psi) - _dexp(z + phi - psi))
            gap = abs(sinh_side - liouville)
    except decimal.Overflow as exc:
        raise Overflow("contraction overflows") from exc
    out = float(gap)
    if math.isinf(out):
        raise Overflow("contraction discrepancy not representable")
    return out


def contraction_remainder(w: float, sample) -> float:
    """Closed form ``exp(-phi-psi-z-4w)/2`` of the contraction discrepancy."""
    phi, psi, z = sample
    return 0.5 * math.exp(-phi - psi - z - 4 * w)
