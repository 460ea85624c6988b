"""Optimizers for the softened energy.

* :func:`steepest_descent_E` flows down ``-grad E`` to a local minimum.
* :func:`cg_pr_minimize_F` runs Polak-Ribiere conjugate gradient on
  ``F = |grad E|^2`` with a secant line search, reaching critical points of
  any index.
* :func:`symmetric_eigenvalues` is a cyclic Jacobi eigenvalue solver.

Energies span tens of orders of magnitude at ``h = 50``, so every search
direction is normalized before a step length is chosen and all tolerances
are relative to ``max(1, E)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Configuration
from .energy import EnergyParams, raw_kernel

# outcome labels carried by OptimResult.status
CONVERGED = "converged"
MAX_ITERS = "max_iters"
SPURIOUS = "spurious_minimum"
STALLED = "stalled"


class NotSymmetricError(ValueError):
    pass


@dataclass(frozen=True)
class DescentSettings:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    backtrack_factor: float = 0.5
    initial_step: float = 1e-2
    restart_interval: int | None = None  # None -> 2n
    f_tol: float = 1e-6
    newton_polish: bool = True
    polish_switch: float = 1e-3
    stall_window: int = 400
    newton_rescue: bool = True
    rescue_iters: int = 60

    def __post_init__(self):
        if self.max_iters < 1 or self.grad_tol <= 0 or self.initial_step <= 0:
            raise ValueError("settings must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if self.restart_interval is not None and self.restart_interval < 1:
            raise ValueError("restart_interval must be positive")


@dataclass
class OptimResult:
    point: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    status: str = CONVERGED
    energy: float = float("nan")
    trace: list | None = None

    @property
    def config(self) -> Configuration:
        return Configuration.from_flat(self.point)


def _norm(v: np.ndarray) -> float:
    # overflow-safe 2-norm
    s = float(np.max(np.abs(v)))
    if s == 0.0 or not math.isfinite(s):
        return s
    return s * float(np.sqrt(np.dot(v / s, v / s)))


def _flat(start) -> np.ndarray:
    if isinstance(start, Configuration):
        return start.flat
    return np.array(start, dtype=float).reshape(-1)


def _energy_tol(s: DescentSettings, e: float) -> float:
    return s.grad_tol * max(1.0, e)


def _newton_step(x, g, H):
    try:
        return -np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        return None


def steepest_descent_E(
    start, p: EnergyParams = EnergyParams(), s: DescentSettings = DescentSettings(), record: bool = False
) -> OptimResult:
    """Flow along ``-grad E`` with Armijo backtracking until ``|grad E| <= grad_tol * max(1, E)``.

    Once the relative gradient drops below ``s.polish_switch`` the remaining
    distance to the minimum is closed with Newton steps on ``grad E = 0``;
    each is accepted only when the gradient shrinks and the energy does not
    rise beyond rounding.
    """
    x = _flat(start)
    h = float(p.h)
    e, g, _ = raw_kernel(x, h, False)
    if not math.isfinite(e):
        raise ValueError("start point has infinite energy")
    trace = [e] if record else None
    t = s.initial_step
    it = 0
    while it < s.max_iters:
        gn = _norm(g)
        if gn <= _energy_tol(s, e):
            return OptimResult(x, e, gn, it, True, CONVERGED, e, trace)
        if s.newton_polish and gn <= s.polish_switch * max(1.0, e):
            e2, g2, H = raw_kernel(x, h, True)
            step = _newton_step(x, g, H)
            if step is not None and _norm(step) < 1e-2:
                xn = x + step
                en, gnew, _ = raw_kernel(xn, h, False)
                if math.isfinite(en) and en <= e * (1 + 1e-14) and _norm(gnew) < 0.5 * gn:
                    x, e, g = xn, min(en, e), gnew
                    it += 1
                    if record:
                        trace.append(e)
                    continue
        d = -g / gn
        accepted = False
        while t > 1e-300:
            xn = x + t * d
            en, gnew, _ = raw_kernel(xn, h, False)
            if math.isfinite(en) and en <= e - 1e-4 * t * gn:
                accepted = True
                break
            t *= s.backtrack_factor
        if not accepted:
            return OptimResult(x, e, gn, it, False, STALLED, e, trace)
        x, e, g = xn, en, gnew
        t = min(t / s.backtrack_factor, 0.1)
        it += 1
        if record:
            trace.append(e)
    return OptimResult(x, e, _norm(g), it, False, MAX_ITERS, e, trace)


def _pr_beta(g_new, g_old) -> float:
    # Polak-Ribiere coefficient on rescaled vectors so huge gradients cannot overflow
    s = float(np.max(np.abs(g_old)))
    if s == 0.0 or not math.isfinite(s):
        return 0.0
    a, b = g_new / s, g_old / s
    return float(a @ (a - b)) / float(b @ b)


def _eval_F(x, h):
    e, g, H = raw_kernel(x, h, True)
    if not math.isfinite(e):
        return math.inf, None, e, g, H
    with np.errstate(over="ignore", invalid="ignore"):
        F = float(g @ g)
        gF = 2.0 * (H @ g)
    if not (math.isfinite(F) and np.all(np.isfinite(gF))):
        return math.inf, None, e, g, H
    return F, gF, e, g, H


def secant_line_search(phi, t_init: float, phi0: float, dphi0: float, backtrack: float = 0.5, max_secant: int = 20):
    """Step length along a normalized descent direction.

    ``phi(t)`` returns ``(value, derivative)``.  Secant iterations drive the
    derivative to zero; if they fail the step is chosen by Armijo
    backtracking instead.  Returns ``None`` when no decreasing step exists.
    """
    t0, p0 = 0.0, dphi0
    t1 = t_init
    best = None
    for _ in range(max_secant):
        v1, p1 = phi(t1)
        if not math.isfinite(v1):
            t1 *= backtrack
            continue
        if v1 < phi0 and (best is None or v1 < best[1]):
            best = (t1, v1)
        if abs(p1) <= 0.1 * abs(dphi0) and v1 < phi0:
            return t1
        if p1 == p0:
            break
        t2 = t1 - p1 * (t1 - t0) / (p1 - p0)
        if not (t2 > 0.0) or t2 > 100.0 * max(t1, t0) or not math.isfinite(t2):
            break
        t0, p0, t1 = t1, p1, t2
    if best is not None and best[1] <= phi0 + 1e-4 * best[0] * dphi0:
        return best[0]
    t = t_init
    while t > 1e-300:
        v, _ = phi(t)
        if math.isfinite(v) and v < phi0 and v <= phi0 + 1e-4 * t * dphi0:
            return t
        t *= backtrack
    return None


def _damped_newton(x, h, s: DescentSettings, max_step: float = 1e-2):
    """Newton iteration on ``grad E = 0`` with steps capped at ``max_step``.

    Returns ``(x, F, gF, e)`` of a converged critical point or ``None``.
    """
    for _ in range(s.rescue_iters):
        F, gF, e, g, H = _eval_F(x, h)
        if not math.isfinite(F):
            return None
        if F <= (s.f_tol * max(1.0, e)) ** 2:
            return x, F, gF, e
        step = _newton_step(x, g, H)
        if step is None or not np.all(np.isfinite(step)):
            return None
        m = float(np.abs(step).max())
        if m > max_step:
            step *= max_step / m
        x = x + step
        if x.min() <= 0.0 or x.max() >= 1.0:
            return None
    return None


def cg_pr_minimize_F(
    start, p: EnergyParams = EnergyParams(), s: DescentSettings = DescentSettings(), record: bool = False
) -> OptimResult:
    """Conjugate gradient (Polak-Ribiere, restarted on ``beta < 0`` and every
    ``restart_interval`` steps) on ``F = |grad E|^2``.

    Success means ``F <= (f_tol * max(1, E))^2``.  ``F`` is badly
    conditioned (its Hessian is roughly the square of the energy Hessian),
    so when the iteration stalls a capped Newton iteration on
    ``grad E = 0`` is tried from the stall point (``s.newton_rescue``).  A run
    that still ends above the threshold has found a non-critical local
    minimum of ``F`` and is reported with status ``SPURIOUS``.
    """
    x = _flat(start)
    h = float(p.h)
    restart = s.restart_interval or x.size
    F, gF, e, g, H = _eval_F(x, h)
    if not math.isfinite(F):
        raise ValueError("start point has infinite energy")
    trace = [F] if record else None

    def f_ok(F, e):
        return F <= (s.f_tol * max(1.0, e)) ** 2

    def _stalled(x, F, gn, it, e):
        if s.newton_rescue:
            found = _damped_newton(x, h, s)
            if found is not None:
                xr, Fr, gFr, er = found
                return OptimResult(xr, Fr, _norm(gFr), it, True, CONVERGED, er, trace)
        return OptimResult(x, F, gn, it, False, SPURIOUS, e, trace)

    d = -gF
    t = s.initial_step
    k = 0
    it = 0
    hist = [F]
    while it < s.max_iters:
        if f_ok(F, e):
            return OptimResult(x, F, _norm(gF), it, True, CONVERGED, e, trace)
        gnorm_rel = math.sqrt(F) / max(1.0, e)
        if s.newton_polish and gnorm_rel <= s.polish_switch:
            step = _newton_step(x, g, H)
            if step is not None and _norm(step) < 1e-2:
                Fn, gFn, en, gn_, Hn = _eval_F(x + step, h)
                if Fn < 0.25 * F:
                    x = x + step
                    F, gF, e, g, H = Fn, gFn, en, gn_, Hn
                    d = -gF
                    k = 0
                    it += 1
                    hist.append(F)
                    if record:
                        trace.append(F)
                    continue
        dn = _norm(d)
        dh = d / dn if dn > 0 and math.isfinite(dn) else None
        dphi = float(gF @ dh) if dh is not None else 0.0
        if dh is None or not dphi < 0:
            gn = _norm(gF)
            if gn == 0.0 or not math.isfinite(gn):
                return _stalled(x, F, gn, it, e)
            d = -gF
            dh = d / gn
            dphi = float(gF @ dh)
            k = 0

        def phi(tt):
            Ft, gFt, *_ = _eval_F(x + tt * dh, h)
            if gFt is None:
                return math.inf, math.nan
            return Ft, float(gFt @ dh)

        tt = secant_line_search(phi, t, F, dphi, s.backtrack_factor)
        if tt is None:
            return _stalled(x, F, _norm(gF), it, e)
        x = x + tt * dh
        t = min(max(tt, 1e-12), 0.1)
        Fn, gFn, e, g, H = _eval_F(x, h)
        k += 1
        beta = _pr_beta(gFn, gF)
        if beta < 0 or k % restart == 0 or not math.isfinite(beta):
            beta = 0.0
        d = -gFn + beta * d
        F, gF = Fn, gFn
        it += 1
        hist.append(F)
        if record:
            trace.append(F)
        if len(hist) > s.stall_window and F > 0.5 * hist[-s.stall_window]:
            return _stalled(x, F, _norm(gF), it, e)
    return OptimResult(x, F, _norm(gF), it, False, MAX_ITERS, e, trace)


def symmetric_eigenvalues(m, sym_tol: float = 1e-9, off_tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm falls below
    ``off_tol * |m|_F``.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError("matrix must be square")
    scale = float(np.abs(a).max()) if a.size else 0.0
    if scale == 0.0:
        return np.zeros(a.shape[0])
    if np.abs(a - a.T).max() > sym_tol * scale:
        raise NotSymmetricError("matrix is not symmetric")
    a = 0.5 * (a + a.T) / scale
    k = a.shape[0]
    target = off_tol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, (a**2).sum() - (np.diag(a) ** 2).sum()))
        if off <= target:
            break
        for p_ in range(k - 1):
            for q in range(p_ + 1, k):
                apq = a[p_, q]
                if abs(apq) <= 1e-18 * (abs(a[p_, p_]) + abs(a[q, q])):
                    a[p_, q] = a[q, p_] = 0.0
                    continue
                theta = (a[q, q] - a[p_, p_]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rp = a[p_, :].copy()
                rq = a[q, :].copy()
                a[p_, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p_].copy()
                cq = a[:, q].copy()
                a[:, p_] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
    return np.sort(np.diag(a)) * scale
