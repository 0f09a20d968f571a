"""Liouville quantum mechanics, ``H = p^2 + exp(2x)``.

Macdonald's kernel, the continuum eigenfunctions and numerical checks of the
integral identities they satisfy.  Delta-normalized statements are checked
only after smearing with smooth packets.
"""

from __future__ import annotations

import decimal
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bessel import SERIES_MIN_ORDER, i_real, k_imag, k_imag_scaled, k_integral
from .errors import DomainError, NonConvergence, Overflow, SlowDecay
from .numeric import Tolerance, integrate_interval, integrate_real_line

OUTER_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-12, max_refinements=12)


@dataclass(frozen=True)
class EnergyShell:
    E: float

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError("a Liouville scattering state needs E > 0")

    @property
    def mu(self) -> float:
        return math.sqrt(self.E)


def _energy(E) -> float:
    return EnergyShell(E.E if isinstance(E, EnergyShell) else float(E)).E


# --------------------------------------------------------------------------
# closed forms


def macdonald_F(x, y, z):
    """``F = (exp(x+y-z) + exp(x-y+z) + exp(-x+y+z)) / 2``; real or complex."""
    with np.errstate(over="ignore"):
        value = 0.5 * (np.exp(x + y - z) + np.exp(x - y + z) + np.exp(-x + y + z))
    if not np.all(np.isfinite(value)):
        raise Overflow("F overflows")
    return value


def propagator_closed_form(x, y, z):
    """Return ``(F, S)`` with ``S = exp(-F)/2``."""
    F = macdonald_F(x, y, z)
    return F, 0.5 * np.exp(-F)


def _norm(mu):
    # (1/pi) sqrt(sinh(pi mu)) * exp(-pi mu / 2), overflow-free
    return np.sqrt(0.5 * -np.expm1(-2 * np.pi * mu)) / np.pi


def eigenfunction(E, x):
    """``psi_E(x) = sqrt(sinh(pi sqrt E)) K_{i sqrt E}(e^x) / pi``.

    Real, with the positive square root of ``sinh``.  ``x`` may be an array.
    """
    mu = math.sqrt(_energy(E))
    x = np.asarray(x, dtype=float)
    out = _norm(mu) * k_imag_scaled(mu, np.exp(x))
    return float(out) if np.ndim(out) == 0 else out


def schrodinger_residual(E, x, h: float) -> float:
    """``|(-d^2/dx^2 + e^{2x} - E) psi_E(x)|`` with a 3-point central difference.

    Vanishes as ``O(h^2)`` until roundoff ``~1e-16/h^2`` takes over.
    """
    E = _energy(E)
    psi = eigenfunction(E, np.array([x - h, x, x + h]))
    d2 = (psi[2] - 2 * psi[1] + psi[0]) / (h * h)
    return float(abs(-d2 + (math.exp(2 * x) - E) * psi[1]))


def _psi_grid(energies, xs):
    """``psi_E(x)`` on the outer product (energies along axis 0)."""
    mu = np.sqrt(np.asarray(energies, dtype=float))[:, None]
    return _norm(mu) * k_imag_scaled(mu, np.exp(np.asarray(xs, dtype=float))[None, :])


# --------------------------------------------------------------------------
# Macdonald's identity and its sister


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    residual: float
    error_estimate: float


def _kernel_integrand(x, y, weight):
    def integrand(z):
        _, S = propagator_closed_form(x, y, z)
        out = np.zeros_like(z)
        live = S > 0
        if np.any(live):
            out[live] = S[live] * weight(z[live])
        return out
    return integrand


def macdonald_check(x: float, y: float, mu: float, tol: Tolerance = OUTER_TOL) -> IdentityCheck:
    """Both sides of ``K(e^x) K(e^y) = int dz S(x,y,z) K(e^z)`` at order ``i mu``."""
    mu = abs(float(mu))
    lhs = k_imag(mu, math.exp(x)) * k_imag(mu, math.exp(y))
    res = integrate_real_line(_kernel_integrand(x, y, lambda z: k_imag(mu, np.exp(z))), tol)
    rhs = res.value.real
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), res.error_estimate)


def verify_macdonald(x: float, y: float, mu: float, tol: Tolerance = OUTER_TOL) -> float:
    """Residual ``|LHS - RHS|`` of Macdonald's identity."""
    return macdonald_check(x, y, mu, tol).residual


def sister_check(x: float, y: float, nu: float, tol: Tolerance = OUTER_TOL) -> IdentityCheck:
    """Both sides of the companion identity with ``I_nu`` under the integral."""
    nu = float(nu)
    if nu < 0:
        raise DomainError("only real order nu >= 0 is supported")
    if x == y:
        warnings.warn("x = y: the z-integrand decays only exponentially", SlowDecay, stacklevel=2)
    lo, hi = min(x, y), max(x, y)
    lhs = i_real(nu, math.exp(lo)) * k_integral(nu, math.exp(hi)).real

    def weight(z):
        w = np.exp(z)
        out = np.zeros_like(z)
        small = w <= 700
        out[small] = i_real(nu, w[small])
        # beyond the series range the kernel must already have killed I_nu
        big = ~small
        if np.any(big):
            bound = -macdonald_F(x, y, z[big]) + w[big]
            if np.any(bound > -745):
                raise Overflow("I_nu(e^z) needed beyond its representable range")
        return out

    res = integrate_real_line(_kernel_integrand(x, y, weight), tol)
    rhs = res.value.real
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), res.error_estimate)


def verify_sister(x: float, y: float, nu: float, tol: Tolerance = OUTER_TOL) -> float:
    return sister_check(x, y, nu, tol).residual


# --------------------------------------------------------------------------
# spectral form of the kernel


def _spectral_tail(e_max):
    r = math.sqrt(e_max)
    return (4 / math.pi) * (r + 2 / math.pi) * math.exp(-0.5 * math.pi * r)


def default_energy_cutoff(target: float = 1e-12) -> float:
    """Smallest ``E_max`` whose unit-amplitude tail bound is below ``target``."""
    e = 1.0
    while _spectral_tail(e) > target:
        e *= 1.1
    return e


def spectral_propagator(x, y, z, e_max=None, tol: Tolerance = OUTER_TOL, full_output=False):
    """``S(x,y,z)`` rebuilt as ``int_0^Emax dE K_{i sqrt E}(e^z) psi_E(x) psi_E(y)``.

    The integrand falls off like ``exp(-pi sqrt(E)/2)``; the neglected tail is
    bounded by ``C (4/pi)(sqrt(Emax) + 2/pi) exp(-pi sqrt(Emax)/2)`` with the
    amplitude ``C`` measured on ``[Emax/2, Emax]``.  With ``full_output`` a
    tuple ``(value, e_max, tail_bound, error_estimate)`` is returned.
    """
    if e_max is None:
        e_max = default_energy_cutoff()
    args = np.exp(np.array([z, x, y], dtype=float))

    def integrand(E):
        mu = np.sqrt(E)[:, None]
        ks = k_imag_scaled(mu, args[None, :])
        return np.exp(-0.5 * np.pi * mu[:, 0]) * _norm(mu[:, 0]) ** 2 * ks[:, 0] * ks[:, 1] * ks[:, 2]

    res = integrate_interval(integrand, 0.0, e_max, tol)
    value = res.value.real
    if not full_output:
        return value
    probe = np.linspace(0.5 * e_max, e_max, 9)
    amplitude = float(np.max(np.abs(integrand(probe)) * np.exp(0.5 * np.pi * np.sqrt(probe))))
    return value, e_max, amplitude * _spectral_tail(e_max), res.error_estimate


# --------------------------------------------------------------------------
# smeared orthonormality and completeness


@dataclass(frozen=True)
class WavePacket:
    """Smooth energy profile used to smear delta-normalized statements.

    ``kind="gaussian"``: ``amplitude * exp(-((E-center)/width)^2)``.
    ``kind="bump"``: ``amplitude * exp(1 - 1/(1-u^2))``, ``u = (E-center)/width``,
    compactly supported on ``|u| < 1``.
    """

    center: float
    width: float
    amplitude: float = 1.0
    kind: str = "gaussian"

    def __post_init__(self):
        if not (self.center > 0 and self.width > 0):
            raise ValueError("center and width must be positive")
        if self.kind not in ("gaussian", "bump"):
            raise ValueError(f"unknown packet kind {self.kind!r}")
        if self.kind == "gaussian":
            below = 0.5 * math.erfc(self.center / self.width)
            if below > 1e-12:
                raise ValueError("packet leaks below E = 0")
        elif self.center - self.width < 0:
            raise ValueError("packet leaks below E = 0")

    @property
    def support(self) -> tuple[float, float]:
        reach = 7 * self.width if self.kind == "gaussian" else self.width
        return max(0.0, self.center - reach), self.center + reach

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        u = (E - self.center) / self.width
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-u * u)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1
        out[inside] = np.exp(1 - 1 / (1 - u[inside] ** 2))
        return self.amplitude * out

    def scaled(self, factor: float) -> "WavePacket":
        return WavePacket(self.center, self.width, self.amplitude * factor, self.kind)


PACKET_TOL = Tolerance(abs_tol=1e-13, rel_tol=1e-11, max_refinements=12)


def packet_profile(g: WavePacket, xs, tol: Tolerance = PACKET_TOL):
    """``Psi_g(x) = int dE g(E) psi_E(x)`` at each ``x`` in ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    lo, hi = g.support
    # the packet is below exp(-25) there; skipping it keeps K on the series path
    lo = max(lo, SERIES_MIN_ORDER ** 2)

    def integrand(E):
        return g(E)[:, None] * _psi_grid(E, xs)

    return np.real(integrate_interval(integrand, lo, hi, tol).value)


def _trapezoid_with_check(values, dx):
    """Uniform trapezoid sum and its change against the half-resolution sum.

    The ends are negligible, so the plain sum is the trapezoid rule; for
    analytic integrands the change bounds the error generously.
    """
    fine = dx * values.sum(axis=-1)
    coarse = 2 * dx * values[..., ::2].sum(axis=-1)
    return fine, np.abs(fine - coarse)


def _packet_window(packets, tol):
    """x-range outside which every packet profile is negligible.

    The right end sits well under the barrier; the left end is pushed out
    until the profiles there have died off.
    """
    mu_max = max(math.sqrt(p.support[1]) for p in packets)
    hi = math.log(40.0 + mu_max * mu_max)
    lo = -10.0
    while True:
        edge = np.array([lo, lo + 1.0])
        size = max(float(np.max(np.abs(packet_profile(p, edge, tol)))) for p in packets)
        if size < 1e-9:
            return lo, hi
        lo -= 10.0
        # exp(x) underflows past about -745
        if lo < -700:
            raise NonConvergence("packet profile does not decay to the left")


ORTHO_TOL = Tolerance(abs_tol=1e-12, rel_tol=1e-10, max_refinements=12)


def smeared_orthonormality(g: WavePacket, h: WavePacket, tol: Tolerance = ORTHO_TOL, dx: float = 0.05):
    """``(lhs, rhs)`` with ``lhs = int dx Psi_g Psi_h`` and ``rhs = int dE g h``.

    Both profiles are computed on one uniform x-grid; the x-integral is the
    trapezoid rule, halved in spacing until it settles.
    """
    lo, hi = _packet_window((g, h), tol)
    rhs_lo = max(g.support[0], h.support[0])
    rhs_hi = min(g.support[1], h.support[1])
    rhs = integrate_interval(lambda E: g(E) * h(E), rhs_lo, rhs_hi, tol).value.real if rhs_hi > rhs_lo else 0.0
    scale = max(abs(rhs), math.sqrt(rhs_norm(g) * rhs_norm(h)))
    for _ in range(4):
        n = int(math.ceil((hi - lo) / dx))
        xs = lo + dx * np.arange(n + 1)
        product = packet_profile(g, xs, tol) * packet_profile(h, xs, tol)
        lhs, change = _trapezoid_with_check(product, dx)
        if change <= 1e-9 * scale:
            return float(lhs), float(rhs)
        dx *= 0.5
    raise NonConvergence(f"x-integral unsettled (change {change:.2e})")


def rhs_norm(g: WavePacket) -> float:
    """``int dE g(E)^2``."""
    lo, hi = g.support
    return integrate_interval(lambda E: g(E) ** 2, lo, hi).value.real


COMPLETENESS_TOL = Tolerance(abs_tol=1e-8, rel_tol=1e-6, max_refinements=10)


def smeared_completeness(
    f: Callable[[np.ndarray], np.ndarray],
    x: float,
    y_range: tuple[float, float] = (-8.0, 8.0),
    e_max: float | None = None,
    dy: float = 0.02,
    tol: Tolerance = COMPLETENESS_TOL,
) -> float:
    """``int dE psi_E(x) int dy f(y) psi_E(y)``, which should reproduce ``f(x)``.

    ``f`` must be vectorized and negligible outside ``y_range``; the
    y-integral is a uniform trapezoid sum.

    Energy ``E`` is reflected near ``y = log sqrt(E)``, so the energy
    integrand dies off only once that wall lies beyond the support of ``f``.
    The default ``e_max`` puts the wall where ``|f|`` has dropped below
    ``1e-6`` of its peak (and at least at ``E = 100``).
    """
    n = int(math.ceil((y_range[1] - y_range[0]) / dy))
    ys = y_range[0] + dy * np.arange(n + 1)
    weights = np.asarray(f(ys), dtype=float)
    if not np.any(weights):
        return 0.0
    peak = np.max(np.abs(weights))
    if e_max is None:
        reach = ys[np.abs(weights) > 1e-6 * peak][-1]
        e_max = max(100.0, math.exp(2 * reach))
    keep = np.abs(weights) > 1e-18 * peak
    ys, weights = ys[keep], weights[keep]

    def integrand(E):
        coefficient = dy * (_psi_grid(E, ys) @ weights)
        return _psi_grid(E, [x])[:, 0] * coefficient

    return integrate_interval(integrand, 0.0, e_max, tol).value.real


# --------------------------------------------------------------------------
# finite-difference and limit checks


def qm_entwine_check(x: float, y: float, z: float, h: float, pair: str = "xz") -> float:
    """``|(-d_a^2 + e^{2a}) S - (-d_b^2 + e^{2b}) S|`` by central differences.

    ``pair`` names the two arguments compared, e.g. ``"xz"`` or ``"yz"``.
    """
    point = {"x": x, "y": y, "z": z}

    def S(**shift):
        p = dict(point)
        for k, v in shift.items():
            p[k] += v
        return propagator_closed_form(p["x"], p["y"], p["z"])[1]

    def schrodinger(var):
        d2 = (S(**{var: h}) - 2 * S() + S(**{var: -h})) / h ** 2
        return -d2 + math.exp(2 * point[var]) * S()

    a, b = pair
    return abs(schrodinger(a) - schrodinger(b))


def free_particle_limit(x: float, X: float, offset: float):
    """``(F(x, offset, offset - X), e^x cosh X)``; the first tends to the second
    as ``offset -> -inf``, the gap being ``exp(2 offset - x - X) / 2``."""
    if offset > -10:
        raise DomainError("offset must be <= -10")
    return float(macdonald_F(x, offset, offset - X)), math.exp(x) * math.cosh(X)


def free_particle_gap(x: float, X: float, offset: float) -> float:
    """``F(x, offset, offset - X) - e^x cosh X`` in 60-digit decimal arithmetic.

    Both terms agree to about ``2 |offset|`` e-folds, too many for floats.
    """
    if offset > -10:
        raise DomainError("offset must be <= -10")
    x, X, o = (decimal.Decimal(repr(float(v))) for v in (x, X, offset))
    with decimal.localcontext(decimal.Context(prec=60)) as ctx:
        ex = ctx.exp
        F = (ex(x + o - (o - X)) + ex(x - o + (o - X)) + ex(-x + o + (o - X))) / 2
        gap = F - ex(x) * (ex(X) + ex(-X)) / 2
    return float(gap)
