r"""Modified Bessel functions of imaginary and complex order.

Two representations are used.  For ``Re w > 0`` the integral

.. math::
    K_\nu(w) = \frac12 \int_{-\infty}^{\infty} e^{-w\cosh t + \nu t}\,dt

is evaluated along the horizontal line ``Im t = theta``.  The height is taken
from the saddle point ``sinh t0 = nu/w`` and clipped to the strip in which the
integrand still decays at both ends.  For purely imaginary order and small
argument this pulls the factor ``exp(-pi*mu/2)`` out of the integrand, so
``K_{i mu}(x)`` keeps its relative accuracy long after the plain cosine
transform would have lost every digit to cancellation.

For ``|w| >= 10`` the large-argument series

.. math::
    K_\nu(w) \sim \sqrt{\pi/(2w)}\,e^{-w}\sum_k a_k(\nu)\,w^{-k},\qquad
    a_k = \prod_{j=1}^{k}\frac{4\nu^2-(2j-1)^2}{8j}

takes over, truncated before its smallest term.

Real arguments of imaginary order, the hot path of the spectral checks, have
faster routes: the ascending series for ``x <= 2``, the same asymptotic series
when it reaches full precision, and otherwise the integral along a path that
bends up to the saddle height only where the phase oscillates.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import loggamma

from .errors import DomainError, OutsideDomain, Overflow
from .numeric import Tolerance, integrate_real_line

SWITCH_RADIUS = 10.0
SECTOR = 1.5 * np.pi

# the integrand is rescaled per component, so only the relative test matters
BESSEL_TOL = Tolerance(abs_tol=1e-290, rel_tol=1e-13, max_refinements=14)


def _saddle_height(nu, w):
    alpha = np.angle(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.imag(np.arcsinh(nu / w))
    theta = np.where(np.isfinite(theta), theta, 0.0)
    room = 0.5 * np.pi - np.abs(alpha)
    margin = np.minimum(0.5 * room, 1.0 / (1.0 + np.abs(nu)))
    return np.clip(theta, -room + margin, room - margin)


def _heine_schlafli(nu, w, tol=BESSEL_TOL, log_scale=0.0, derivative=False):
    """``exp(log_scale) * K_nu(w)`` (and ``d/dw`` of it) by quadrature.

    ``nu``, ``w`` and ``log_scale`` broadcast against each other.
    """
    nu, w, log_scale = np.broadcast_arrays(
        np.asarray(nu, dtype=complex), np.asarray(w, dtype=complex), np.asarray(log_scale, dtype=float)
    )
    if np.any(np.real(w) <= 0):
        raise OutsideDomain("integral representation needs Re w > 0")
    theta = _saddle_height(nu, w)
    shape = nu.shape

    def integrand(s):
        ts = s.reshape((-1,) + (1,) * len(shape)) + 1j * theta
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            c = np.cosh(ts)
            expo = -w * c + nu * ts + log_scale
            val = 0.5 * np.exp(expo)
            # tails: the exponent's real part has run off to -inf
            dead = ~np.isfinite(val) | (np.real(expo) < -745)
            val = np.where(dead, 0.0, val)
            if derivative:
                dval = np.where(dead, 0.0, -c * val)
                return np.stack([val, dval], axis=-1)
        return val

    res = integrate_real_line(integrand, tol, double_exponential=True)
    value = np.asarray(res.value)
    if derivative:
        return value[..., 0], value[..., 1]
    return value


def _k_imag_bent(mu, x, tol=BESSEL_TOL):
    """``exp(pi mu/2) K_{i mu}(x)`` for real ``x`` along a bent path.

    The path keeps the saddle height ``theta0`` out to just past the saddles
    at ``Re t = +-s1`` and then steps down to the real axis over a fixed
    width, so beyond the saddles ``-x cosh t`` decays before it oscillates.
    A horizontal line close to ``Im t = pi/2`` needs an order of magnitude
    more nodes when ``mu > x``.
    """
    mu, x = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(x, dtype=float))
    ratio = mu / x
    with np.errstate(invalid="ignore"):
        spread = np.where(ratio > 1, np.arccosh(np.maximum(ratio, 1.0)), 0.0)
        height = np.where(ratio > 1, 0.5 * np.pi, np.arcsin(np.minimum(ratio, 1.0)))
    height = np.minimum(height, 0.5 * np.pi - 1.0 / (1.0 + mu))
    edge = spread + 1.0
    tau = 0.5
    shape = mu.shape

    def integrand(s):
        s = s.reshape((-1,) + (1,) * len(shape))
        up, down = (s + edge) / tau, (s - edge) / tau
        t = s + 0.5j * height * (np.tanh(up) - np.tanh(down))
        dt = 1 + 0.5j * height * (np.cosh(up) ** -2 - np.cosh(down) ** -2) / tau
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            expo = -x * np.cosh(t) + 1j * mu * t + 0.5 * np.pi * mu
            val = 0.5 * np.exp(expo) * dt
            dead = ~np.isfinite(val) | (np.real(expo) < -745)
        return np.where(dead, 0.0, val)

    return np.real(np.asarray(integrate_real_line(integrand, tol, double_exponential=True).value))


SERIES_RADIUS = 2.0
SERIES_MIN_ORDER = 0.05


def _k_imag_series_scaled(mu, x):
    r"""``exp(pi mu/2) K_{i mu}(x)`` from the ascending series, ``x <= 2``.

    .. math::
        K_{i\mu}(x) = -\frac{\pi}{\sinh\pi\mu}\,
        \mathrm{Im}\sum_k \frac{(x/2)^{i\mu+2k}}{k!\,\Gamma(1+i\mu+k)}

    The prefactor ``exp(pi mu/2)/sinh(pi mu)`` and ``1/Gamma(1+i mu)`` are
    combined in log space, so large orders neither overflow nor cancel.
    """
    lead = -0.5 * np.pi * mu - loggamma(1 + 1j * mu) + 1j * mu * np.log(0.5 * x)
    q = 0.25 * x * x
    term = np.ones(np.broadcast(mu, x).shape, dtype=complex)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + 1j * mu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    prefactor = -2 * np.pi / -np.expm1(-2 * np.pi * mu)
    return prefactor * np.imag(np.exp(lead) * total)


def _k_imag_asymptotic_scaled(mu, x, nmax=60):
    """Large-argument series for real ``x``; NaN where it fails to reach 1e-16."""
    four_mu2 = 4 * mu * mu
    term = np.ones_like(x)
    total = term.copy()
    done = np.zeros(x.shape, dtype=bool)
    for j in range(1, nmax + 1):
        new = term * -(four_mu2 + (2 * j - 1) ** 2) / (8 * j * x)
        # stop at the smallest term, converged or not
        grew = np.abs(new) > np.abs(term)
        done |= grew
        term = np.where(done, 0.0, new)
        total += term
        if np.all(done | (np.abs(term) <= 1e-17 * np.abs(total))):
            break
    converged = np.abs(term) <= 1e-16 * np.abs(total)
    with np.errstate(under="ignore"):
        value = np.sqrt(0.5 * np.pi / x) * np.exp(0.5 * np.pi * mu - x) * total
    return np.where(converged & ~done, value, np.nan)


def k_imag_scaled(mu, x, tol=BESSEL_TOL):
    """``exp(pi*|mu|/2) * K_{i mu}(x)`` for real ``x > 0``; broadcasts.

    Arguments ``x <= 2`` use the ascending series (orders below 0.05 excepted,
    where it degenerates), large arguments the asymptotic series wherever it
    converges to full precision, everything else the saddle-shifted integral.
    """
    mu, x = np.broadcast_arrays(np.abs(np.asarray(mu, dtype=float)), np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("K_{i mu}(x) needs x > 0")
    out = np.empty(mu.shape)
    series = (x <= SERIES_RADIUS) & (mu >= SERIES_MIN_ORDER)
    if np.any(series):
        out[series] = _k_imag_series_scaled(mu[series], x[series])
    large = ~series & (x >= 2 * SWITCH_RADIUS)
    if np.any(large):
        out[large] = _k_imag_asymptotic_scaled(mu[large], x[large])
    rest = ~series & ~(large & np.isfinite(out))
    if np.any(rest):
        out[rest] = _k_imag_bent(mu[rest], x[rest], tol)
    return float(out) if out.ndim == 0 else out


def k_imag_integral_scaled(mu, x, tol=BESSEL_TOL):
    """Same as :func:`k_imag_scaled` but always by quadrature."""
    mu = np.abs(np.asarray(mu, dtype=float))
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("K_{i mu}(x) needs x > 0")
    out = _k_imag_bent(mu, x, tol)
    return float(out) if out.ndim == 0 else out


def k_imag(mu, x, tol=BESSEL_TOL):
    """Macdonald function ``K_{i mu}(x)`` of imaginary order, ``x > 0``.

    Even in ``mu``.  Accepts arrays for ``mu`` and ``x`` (broadcast).
    """
    mu = np.abs(np.asarray(mu, dtype=float))
    scaled = k_imag_scaled(mu, x, tol)
    out = scaled * np.exp(-0.5 * np.pi * mu)
    return float(out) if np.ndim(out) == 0 else out


def _series_coefficients(nu, nmax):
    four_nu2 = 4 * nu * nu
    coeffs = [1.0 + 0j]
    for j in range(1, nmax + 1):
        coeffs.append(coeffs[-1] * (four_nu2 - (2 * j - 1) ** 2) / (8 * j))
    return coeffs


def _check_sector(arg):
    if abs(arg) >= SECTOR:
        raise DomainError(f"|arg w| = {abs(arg):.3f} outside the sector |arg w| < 3pi/2")


def k_asymptotic(nu, w, order: int) -> complex:
    """Large-argument series for ``K_nu(w)`` keeping ``order`` corrections.

    ``order=0`` is the bare prefactor ``sqrt(pi/(2w)) exp(-w)``.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    w = complex(w)
    if w == 0:
        raise DomainError("w = 0")
    _check_sector(np.angle(w))
    coeffs = _series_coefficients(complex(nu), order)
    series = sum(c * w ** -k for k, c in enumerate(coeffs))
    return complex(np.sqrt(np.pi / (2 * w)) * np.exp(-w) * series)


def _asymptotic_log(nu, z, nmax=60):
    """log K_nu(e^z) and its z-derivative from the optimally truncated series.

    Working with ``z = log w`` lets ``|arg w|`` reach past pi.
    """
    nu, z = complex(nu), complex(z)
    _check_sector(z.imag)
    winv = np.exp(-z)
    coeffs = _series_coefficients(nu, nmax)
    total, dtotal = 0j, 0j
    prev = math.inf
    used = 0
    for k, c in enumerate(coeffs):
        term = c * winv ** k
        size = abs(term)
        if k > 0 and (size > prev or size < 1e-17 * abs(total)):
            if size < 1e-17 * abs(total):
                total += term
                dtotal += -k * term
                used = k
            break
        total += term
        dtotal += -k * term
        prev = size if size > 0 else prev
        used = k
        if size == 0:
            break
    w = np.exp(z)
    log_k = 0.5 * math.log(math.pi / 2) - 0.5 * z - w + np.log(total)
    dlog_k = -0.5 - w + dtotal / total
    return complex(log_k), complex(dlog_k), used


def regime_of(w) -> str:
    """Which representation evaluates ``K_nu(w)``: 'integral' or 'asymptotic'."""
    w = complex(w)
    if abs(w) >= SWITCH_RADIUS:
        return "asymptotic"
    if w.real > 0:
        return "integral"
    raise OutsideDomain(f"no regime covers w = {w}")


def k_complex(nu, w, tol=BESSEL_TOL) -> complex:
    """``K_nu(w)`` for complex order and argument.

    Integral representation below ``|w| = 10`` (needs ``Re w > 0``), the
    asymptotic series above it.
    """
    w = complex(w)
    if regime_of(w) == "asymptotic":
        log_k, _, _ = _asymptotic_log(nu, np.log(w))
        return complex(np.exp(log_k))
    return complex(_heine_schlafli(nu, w, tol))


def k_integral(nu, w, tol=BESSEL_TOL) -> complex:
    """Force the integral representation (any ``Re w > 0``)."""
    return complex(_heine_schlafli(nu, complex(w), tol))


def log_k_of_exp(nu, z, tol=BESSEL_TOL):
    """``(log K_nu(e^z), d/dz log K_nu(e^z), regime)``.

    The logarithm is principal in the integral regime; callers that need a
    continuous branch unwrap it themselves.
    """
    z = complex(z)
    w = np.exp(z)
    if abs(w) >= SWITCH_RADIUS:
        log_k, dlog_k, _ = _asymptotic_log(nu, z)
        return log_k, dlog_k, "asymptotic"
    if abs(z.imag) >= 0.5 * np.pi:
        raise OutsideDomain(f"no regime covers z = {z}")
    k, dk = _heine_schlafli(nu, w, tol, derivative=True)
    k, dk = complex(k), complex(dk)
    if k == 0:
        return -np.inf + 0j, np.inf + 0j, "integral"
    return complex(np.log(k)), w * dk / k, "integral"


def i_real(nu, x):
    r"""``I_nu(x)`` for real ``nu >= 0``, ``x > 0`` from the ascending series.

    .. math:: I_\nu(x) = \sum_k \frac{(x/2)^{\nu+2k}}{k!\,\Gamma(\nu+k+1)}

    All terms are positive, so the sum is accurate wherever it is finite.
    Vectorized in ``x``.
    """
    if nu < 0:
        raise DomainError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be positive")
    if np.any(x > 700):
        raise Overflow("I_nu(x) overflows for x > 700")
    half = 0.5 * x
    with np.errstate(divide="ignore", under="ignore"):
        term = np.exp(nu * np.log(half) - math.lgamma(nu + 1)) if nu > 0 else np.ones_like(half)
    term = np.where(half == 0, 1.0 if nu == 0 else 0.0, term)
    total = term.copy()
    q = half * half
    k = 0
    while True:
        k += 1
        term = term * q / (k * (nu + k))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return float(total) if total.ndim == 0 else total
