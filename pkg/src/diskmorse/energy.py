"""Softened hard-disk energy, its derivatives, and the squared-gradient objective.

The energy of labeled centers ``x_1..x_n`` in the unit square is

    E = sum_{i<j} (d_ij / 2)^(-h) + sum_i sum_{w in L,R,B,T} dist(x_i, w)^(-h)

One reciprocal-power term is kept per wall so that ``E`` is smooth even where
a center is equidistant from two walls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import Configuration

DEFAULT_HARDNESS = 50.0


class EnergyDomainError(ValueError):
    """Coincident centers or a center on the boundary (infinite energy)."""


@dataclass(frozen=True)
class EnergyParams:
    h: float = DEFAULT_HARDNESS
    n: int | None = None

    def __post_init__(self):
        if not self.h >= 2:
            raise ValueError("hardness must be >= 2")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass
class EnergyEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None = None


@numba.njit(cache=True)
def _kernel(x, h, want_hess):
    n = x.shape[0] // 2
    e = 0.0
    g = np.zeros(2 * n)
    H = np.zeros((2 * n, 2 * n)) if want_hess else np.zeros((1, 1))
    hp = h / 2.0
    for i in range(n):
        for k in range(2):
            c = x[2 * i + k]
            lo = c
            hi = 1.0 - c
            if lo <= 0.0 or hi <= 0.0:
                return np.inf, g, H
            tl = lo ** (-h)
            th = hi ** (-h)
            e += tl + th
            g[2 * i + k] += -h * tl / lo + h * th / hi
            if want_hess:
                H[2 * i + k, 2 * i + k] += h * (h + 1.0) * (tl / (lo * lo) + th / (hi * hi))
    for i in range(n):
        for j in range(i + 1, n):
            ux = x[2 * i] - x[2 * j]
            uy = x[2 * i + 1] - x[2 * j + 1]
            q = ux * ux + uy * uy
            if q <= 0.0:
                return np.inf, g, H
            s = q / 4.0
            t = s ** (-hp)
            e += t
            # d t / d q and d^2 t / d q^2
            a = -hp * t / s / 4.0
            g[2 * i] += 2.0 * a * ux
            g[2 * i + 1] += 2.0 * a * uy
            g[2 * j] -= 2.0 * a * ux
            g[2 * j + 1] -= 2.0 * a * uy
            if want_hess:
                b = hp * (hp + 1.0) * t / (s * s) / 16.0
                mxx = 2.0 * a + 4.0 * b * ux * ux
                myy = 2.0 * a + 4.0 * b * uy * uy
                mxy = 4.0 * b * ux * uy
                for p, r, m in ((0, 0, mxx), (1, 1, myy), (0, 1, mxy), (1, 0, mxy)):
                    H[2 * i + p, 2 * i + r] += m
                    H[2 * j + p, 2 * j + r] += m
                    H[2 * i + p, 2 * j + r] -= m
                    H[2 * j + p, 2 * i + r] -= m
    return e, g, H


def _as_flat(c) -> np.ndarray:
    if isinstance(c, Configuration):
        return c.flat
    return np.ascontiguousarray(c, dtype=float).reshape(-1)


def evaluate(c, p: EnergyParams = EnergyParams(), hessian: bool = False) -> EnergyEval:
    """Energy, gradient and (optionally) Hessian in one pass.

    ``c`` may be a :class:`Configuration` or a flat array of length ``2n``.
    """
    x = _as_flat(c)
    e, g, H = _kernel(x, float(p.h), hessian)
    if not np.isfinite(e):
        raise EnergyDomainError("coincident centers or center on the boundary")
    if hessian:
        H = 0.5 * (H + H.T)
        return EnergyEval(e, g, H)
    return EnergyEval(e, g)


def energy(c, p: EnergyParams = EnergyParams()) -> float:
    return evaluate(c, p).value


def gradient(c, p: EnergyParams = EnergyParams()) -> np.ndarray:
    return evaluate(c, p).gradient


def hessian(c, p: EnergyParams = EnergyParams()) -> np.ndarray:
    return evaluate(c, p, hessian=True).hessian


def grad_norm_sq(c, p: EnergyParams = EnergyParams()) -> tuple[float, np.ndarray]:
    """``F = |grad E|^2`` and ``grad F = 2 H grad E``."""
    ev = evaluate(c, p, hessian=True)
    return float(ev.gradient @ ev.gradient), 2.0 * ev.hessian @ ev.gradient


def raw_kernel(x: np.ndarray, h: float, want_hess: bool):
    """Unchecked kernel access for inner optimizer loops (may return ``inf``)."""
    return _kernel(x, h, want_hess)
