"""Double-exponential quadrature and an embedded Runge-Kutta integrator.

Every integrand handed to the quadrature routines must be *vectorized*: it
receives a 1-d array of abscissae of length ``n`` and returns an array whose
leading axis has length ``n``.  Trailing axes are allowed and are integrated
component-wise on a shared set of nodes, which is how the Bessel engine
evaluates many arguments at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonConvergence, StepUnderflow

_EPS = np.finfo(float).eps
_CHUNK = 2_000_000


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_refinements: int = 12

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 1:
            raise ValueError("max_refinements must be a positive integer")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class QuadratureResult:
    """Integral value with an a-posteriori error estimate.

    ``value`` is a complex scalar, or an array for integrands with trailing
    axes; ``error_estimate`` is then the largest component error.
    """

    value: complex | np.ndarray
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class OdePath:
    abscissae: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.abscissae) != len(self.states):
            raise ValueError("abscissae and states differ in length")
        if np.any(np.diff(self.abscissae) <= 0):
            raise ValueError("abscissae must be strictly increasing")


# --------------------------------------------------------------------------
# quadrature


def _sinh_map(t):
    return np.sinh(t), np.cosh(t)


def _identity_map(t):
    return t, np.ones_like(t)


def _exp_sinh_map(t):
    u = 0.5 * np.pi * np.sinh(t)
    x = np.exp(u)
    return x, x * 0.5 * np.pi * np.cosh(t)


def _de_trapezoid(integrand, transform, tol, t_cap, h0=0.5):
    """Trapezoid rule in the transformed variable with level doubling."""
    evaluations = 0

    def terms(t):
        nonlocal evaluations
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, w = transform(t)
        f = np.asarray(integrand(x), dtype=complex)
        if f.ndim == 0:
            f = np.full(t.size, f, dtype=complex)
        if f.shape[0] != t.size:
            raise ValueError("integrand must return one row per abscissa")
        evaluations += t.size
        w = w.reshape(w.shape + (1,) * (f.ndim - 1))
        out = f * w
        out[np.broadcast_to(w == 0, out.shape)] = 0.0
        if not np.all(np.isfinite(out)):
            raise NonConvergence("integrand produced non-finite values")
        return out

    def sums(t, width):
        # bounded memory for integrands with large trailing shapes
        step = max(1, _CHUNK // max(width, 1))
        total = absolute = 0.0
        for start in range(0, t.size, step):
            block = terms(t[start:start + step])
            total = total + block.sum(axis=0)
            absolute = absolute + np.abs(block).sum(axis=0)
        return total, absolute

    centre = terms([0.0])[0]
    peak = np.abs(centre)
    stored = {0: centre}
    bounds = {}
    for direction in (1, -1):
        k, below = 0, 0
        while True:
            k += 1
            t = direction * k * h0
            if abs(t) > t_cap:
                raise NonConvergence(f"integrand has not decayed by t={t:.2f}")
            term = terms([t])[0]
            stored[direction * k] = term
            mag = np.abs(term)
            peak = np.maximum(peak, mag)
            cutoff = 1e-2 * np.maximum(tol.abs_tol, 1e-17 * peak)
            below = below + 1 if np.all(mag < cutoff) else 0
            if below >= 2:
                break
        bounds[direction] = k

    lo, hi = -bounds[-1], bounds[1]
    total = sum(stored[k] for k in range(lo, hi + 1))
    estimate = h0 * total
    l1 = h0 * sum(np.abs(stored[k]) for k in range(lo, hi + 1))
    h = h0
    for level in range(1, int(tol.max_refinements) + 1):
        h *= 0.5
        count = (hi - lo) * 2 ** level
        j = np.arange(1, count, 2)
        new_sum, new_abs = sums(lo * h0 + j * h, np.size(centre))
        previous = estimate
        estimate = 0.5 * previous + h * new_sum
        l1 = 0.5 * l1 + h * new_abs
        # differences below the rounding level of the sum carry no information
        err = np.maximum(np.abs(estimate - previous), 50 * _EPS * l1)
        allowed = np.maximum(tol.abs_tol, tol.rel_tol * np.abs(estimate))
        allowed = np.maximum(allowed, 50 * _EPS * l1)
        if level >= 2 and np.all(err <= allowed):
            value = complex(estimate) if np.ndim(estimate) == 0 else estimate
            return QuadratureResult(value, float(np.max(err)), evaluations)
    raise NonConvergence(
        f"no convergence after {tol.max_refinements} refinements "
        f"(error {float(np.max(err)):.3e})"
    )


def integrate_real_line(
    integrand: Callable[[np.ndarray], np.ndarray],
    tol: Tolerance = DEFAULT_TOL,
    *,
    double_exponential: bool = False,
) -> QuadratureResult:
    """Integrate over the whole real line.

    Integrands decaying like ``exp(-c|X|)`` or faster are mapped through
    ``X = sinh t``, which makes the transformed integrand decay double
    exponentially.  Pass ``double_exponential=True`` when the integrand
    already decays double exponentially (e.g. ``exp(-cosh X)``); the
    trapezoid rule is then applied directly in ``X``.
    """
    if double_exponential:
        return _de_trapezoid(integrand, _identity_map, tol, t_cap=700.0)
    return _de_trapezoid(integrand, _sinh_map, tol, t_cap=8.0)


def integrate_half_line(
    integrand: Callable[[np.ndarray], np.ndarray],
    tol: Tolerance = DEFAULT_TOL,
) -> QuadratureResult:
    """Integrate over ``(0, inf)`` with the exp-sinh map ``E = exp(pi/2 sinh t)``."""
    return _de_trapezoid(integrand, _exp_sinh_map, tol, t_cap=5.5)


def integrate_interval(
    integrand: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: Tolerance = DEFAULT_TOL,
) -> QuadratureResult:
    """Tanh-sinh quadrature over the finite interval ``[a, b]``."""
    if not b > a:
        raise ValueError("need a < b")
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def transform(t):
        u = 0.5 * np.pi * np.sinh(t)
        x = mid + half * np.tanh(u)
        w = half * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
        return x, w

    # nodes past |t| ~ 3.2 sit on the endpoints; the integrand must be finite there
    return _de_trapezoid(integrand, transform, tol, t_cap=4.5)


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(rhs, t, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(np.asarray(rhs(t + _C[i] * h, yi), dtype=float))
    y_new = y + h * sum(b * kj for b, kj in zip(_B5, k) if b)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e)
    return y_new, err, k[6]


def solve_ivp(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
    t_eval=None,
) -> OdePath:
    """Integrate ``y' = rhs(t, y)`` from ``span[0]`` to ``span[1]``.

    Steps are controlled on the embedded fourth-order error estimate with the
    fifth-order solution propagated.  With ``t_eval`` the steps are clipped so
    that every requested abscissa is hit exactly and only those states are
    returned; otherwise all accepted steps are returned.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError("span must be increasing")
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    if t_eval is not None:
        targets = np.asarray(t_eval, dtype=float)
        if targets.size and (targets[0] < t0 or targets[-1] > t1 or np.any(np.diff(targets) <= 0)):
            raise ValueError("t_eval must be increasing and inside span")
    else:
        targets = np.array([t1])
    ts, ys = [], []
    if t_eval is not None and targets.size and targets[0] == t0:
        ts.append(t0)
        ys.append(y.copy())
        targets = targets[1:]
    elif t_eval is None:
        ts.append(t0)
        ys.append(y.copy())

    t = t0
    k1 = np.asarray(rhs(t, y), dtype=float)
    h = min(0.01 * (t1 - t0), 0.1)
    idx = 0
    while idx < targets.size:
        stop = targets[idx]
        clipped = t + h >= stop
        step = stop - t if clipped else h
        if step <= 16 * _EPS * max(1.0, abs(t)):
            raise StepUnderflow(f"step collapsed at t={t:.6g}")
        y_new, err, k_last = _dp_step(rhs, t, y, step, k1)
        scale = tol.abs_tol + tol.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(err) / scale)) if err.size else 0.0
        if not np.isfinite(ratio):
            ratio = np.inf
        if ratio <= 1.0:
            t = stop if clipped else t + step
            y, k1 = y_new, k_last
            if not np.all(np.isfinite(y)):
                raise StepUnderflow(f"solution blew up at t={t:.6g}")
            if t_eval is None:
                ts.append(t)
                ys.append(y.copy())
            if clipped:
                if t_eval is not None:
                    ts.append(t)
                    ys.append(y.copy())
                idx += 1
            growth = 5.0 if ratio == 0 else min(5.0, 0.9 * ratio ** -0.2)
            if not clipped or step >= h:
                h = step * growth
        else:
            h = step * max(0.1, 0.9 * ratio ** -0.2) if np.isfinite(ratio) else 0.1 * step
            if h <= 16 * _EPS * max(1.0, abs(t)):
                raise StepUnderflow(f"step collapsed at t={t:.6g}")
    return OdePath(np.array(ts), np.array(ys))
