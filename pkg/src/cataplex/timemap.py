"""Energy-dependent complex time ``exp(-i E t) = K_{i sqrt E}(e^z)``.

Includes the deep-Euclidean expansion of ``T = i t`` and a predictor-corrector
tracer for curves of constant ``|K_{i sqrt E}(e^z)|`` in the complex z plane,
along which ``t`` stays on a line parallel to the real axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bessel import k_imag, log_k_of_exp
from .errors import BesselZero, Degenerate, DomainError, LeftDomain, SaddlePoint
from .liouville import EnergyShell, _energy

TWO_PI = 2 * math.pi
IM_GUARD = 1.5 * math.pi - 0.1
RE_GUARD = 6.0


def _wrap(angle):
    """Map to (-pi, pi]."""
    return angle - TWO_PI * math.ceil((angle - math.pi) / TWO_PI)


@dataclass(frozen=True)
class ShellTime:
    E: float
    z: complex
    t: complex
    branch: int
    regime: str

    @property
    def log_k(self) -> complex:
        return -1j * self.E * self.t


def t_of_z(E, z, branch_hint=None) -> ShellTime:
    """``t = (i/E) log K_{i sqrt E}(e^z)`` on a definite branch of the log.

    ``branch_hint`` is either an integer branch index or a neighbouring
    :class:`ShellTime`, in which case the branch closest in phase is chosen.
    Without a hint the principal branch is used.
    """
    E = _energy(E)
    z = complex(z)
    log_k, dlog, regime = log_k_of_exp(1j * math.sqrt(E), z)
    # 1/|dlog| is the distance to the nearest zero; below roundoff the log is meaningless
    if not np.isfinite(log_k.real) or abs(dlog) * 1e-12 * max(1.0, abs(z)) > 1.0:
        raise BesselZero(f"K vanishes at z = {z}")
    principal = complex(log_k.real, _wrap(log_k.imag))
    if branch_hint is None:
        branch = 0
    elif isinstance(branch_hint, ShellTime):
        ref = branch_hint.log_k.imag
        branch = round((ref - principal.imag) / TWO_PI)
    else:
        branch = int(branch_hint)
    log_k = principal + 1j * TWO_PI * branch
    return ShellTime(E, z, 1j * log_k / E, branch, regime)


def euclidean_T_series(E, z: float, order: int) -> float:
    """Deep-Euclidean expansion of ``T`` (``t = -iT``) keeping ``order + 1`` terms.

    ``T ~ (e^z + z/2 - ln sqrt(pi/2) + (1+4E)/8 e^{-z}) / E``.
    """
    E = _energy(E)
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    terms = [
        math.exp(z),
        0.5 * z,
        -0.5 * math.log(0.5 * math.pi),
        euclidean_coefficient(E) * math.exp(-z),
    ]
    return sum(terms[: order + 1]) / E


def euclidean_coefficient(E) -> float:
    """Coefficient ``(1+4E)/8`` of ``e^{-z}`` in the expansion of ``E*T``."""
    return (1 + 4 * _energy(E)) / 8


# --------------------------------------------------------------------------
# constant-modulus contours


class ContourKind(enum.Enum):
    OPEN = "Open"
    CLOSED = "Closed"


@dataclass
class Contour:
    E: float
    level: float
    step: float
    points: np.ndarray
    modulus: np.ndarray
    phase: np.ndarray
    branch_track: np.ndarray
    regimes: list = field(default_factory=list)
    closed: bool = False
    termination: str = "max_steps"

    @property
    def winding(self) -> float:
        """Phase advance of ``K`` around the contour in units of ``2 pi``.

        Only meaningful for closed contours, where it is an integer.
        """
        closing = _wrap(self.phase[0] - self.phase[-1])
        return (self.phase[-1] + closing - self.phase[0]) / TWO_PI


def _in_domain(z: complex) -> bool:
    return abs(z.imag) < IM_GUARD and z.real < RE_GUARD


def _evaluate(mu: float, z: complex):
    if not _in_domain(z):
        raise LeftDomain(f"z = {z} outside the tracing region")
    try:
        log_k, dlog, regime = log_k_of_exp(1j * mu, z)
    except DomainError as exc:
        raise LeftDomain(str(exc)) from exc
    if not np.isfinite(log_k.real):
        raise LeftDomain(f"K vanishes at z = {z}")
    return log_k, dlog, regime


def _correct(mu, z, target, tol, max_iter=30):
    for _ in range(max_iter):
        log_k, dlog, regime = _evaluate(mu, z)
        r = log_k.real - target
        if abs(r) <= tol:
            return z, log_k, dlog, regime
        z = z - r * np.conj(dlog) / abs(dlog) ** 2
    return None


def trace_level_contour(
    E,
    z0: complex,
    step: float,
    max_steps: int,
    *,
    forward_time: bool = True,
    level_tol: float = 1e-12,
) -> Contour:
    """Follow ``|K_{i sqrt E}(e^z)| = |K(e^{z0})|`` starting from ``z0``.

    Each step predicts along the tangent of the level set (orthogonal to the
    gradient of ``log|K|``) and corrects with Newton steps along the gradient
    until ``|log|K| - log level| <= level_tol``.  The step halves when the
    correction is large or the direction turns sharply and recovers towards
    ``step`` afterwards.  With ``forward_time`` the contour is oriented so
    that ``Re t = -arg K / E`` increases.

    The trace stops when it returns within ``step`` of ``z0`` (closed), leaves
    the evaluable region, or after ``max_steps`` accepted steps.
    """
    E = _energy(E)
    mu = math.sqrt(E)
    z0 = complex(z0)
    sign = -1.0 if forward_time else 1.0
    log_k, dlog, regime = _evaluate(mu, z0)
    if abs(dlog) < 1e-10:
        raise SaddlePoint(f"gradient of log|K| vanishes at z = {z0}")
    target = log_k.real

    points = [z0]
    logs = [log_k]
    regimes = [regime]
    phase = [log_k.imag]
    h = step
    closed = False
    termination = "max_steps"
    far = False
    accepted = 0
    while accepted < max_steps:
        z = points[-1]
        tangent = sign * 1j * np.conj(dlog) / abs(dlog)
        try:
            result = _correct(mu, z + h * tangent, target, level_tol)
        except LeftDomain:
            if h > 1e-3 * step:
                h *= 0.5
                continue
            termination = "left_domain"
            break
        ok = result is not None
        if ok:
            z_new, log_new, dlog_new, regime_new = result
            moved = abs(z_new - (z + h * tangent))
            dphase = _wrap(log_new.imag - logs[-1].imag)
            turn = abs(np.angle((dlog_new / abs(dlog_new)) / (dlog / abs(dlog))))
            ok = moved < 0.25 * h and sign * dphase > 0 and abs(dphase) < 0.5 and turn < 0.3
        if not ok:
            h *= 0.5
            if h < 1e-6 * step:
                termination = "stalled"
                break
            continue
        accepted += 1
        points.append(z_new)
        logs.append(log_new)
        regimes.append(regime_new)
        phase.append(phase[-1] + dphase)
        dlog = dlog_new
        h = min(step, 1.5 * h)
        if abs(z_new - z0) > 2 * step:
            far = True
        if far and accepted >= 3 and abs(z_new - z0) < step:
            closed = True
            termination = "closed"
            break

    phase = np.array(phase)
    principal = np.array([_wrap(p) for p in phase])
    branch = np.rint((phase - principal) / TWO_PI).astype(int)
    return Contour(
        E=E,
        level=math.exp(target),
        step=step,
        points=np.array(points),
        modulus=np.exp(np.array([l.real for l in logs])),
        phase=phase,
        branch_track=branch,
        regimes=regimes,
        closed=closed,
        termination=termination,
    )


def classify_contour(contour: Contour) -> ContourKind:
    """Closed when the trace came back within one step of its start."""
    if len(contour.points) < 2:
        raise Degenerate("a single point cannot be classified")
    if contour.closed and abs(contour.points[-1] - contour.points[0]) < contour.step:
        return ContourKind.CLOSED
    return ContourKind.OPEN


def real_axis_zeros(E, z_lo: float, z_hi: float, samples: int = 400) -> list[float]:
    """Zeros of ``K_{i sqrt E}(e^z)`` for real ``z`` in ``[z_lo, z_hi]``.

    These are the logarithmic singularities that closed level curves wind
    around.
    """
    mu = math.sqrt(_energy(E))
    zs = np.linspace(z_lo, z_hi, samples)
    vals = k_imag(mu, np.exp(zs))
    roots = []
    for a, b, fa, fb in zip(zs[:-1], zs[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(lambda s: k_imag(mu, math.exp(s)), a, b, xtol=1e-14))
    return roots
