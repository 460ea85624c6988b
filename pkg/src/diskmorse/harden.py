"""Recover the exact hard-disk critical point behind a softened one.

Every bond is modeled as a spring: wall springs have rest length ``s`` and
disk-disk springs ``2 s``, where ``s`` is the mean of the wall-bond lengths
and the halved disk-disk lengths, refreshed on every outer iteration.  A
tether spring toward the previous iterate, with a constant annealed to zero,
keeps the relaxation near the starting point when the tangency system leaves
directions free (critical submanifolds).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bonds import (
    EPS_ALL_INDICES,
    BalanceResult,
    BondNetwork,
    bonds_within,
    check_balance,
    extract_bonds,
    wall_distance,
)
from .core import WALL_NORMALS, Configuration, preliminary_radius
from .optimize import secant_line_search

OUTER_ITERS = 50
K0 = 1e-2
RESIDUAL_TOL = 1e-10
OVERLAP_TOL = 1e-8
EPS_LADDER = (0.001, 0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.14)


class HardeningError(RuntimeError):
    pass


@dataclass
class HardenedPoint:
    config: Configuration
    radius: float
    residual: float
    source_bonds: BondNetwork
    status: str = "ok"
    eps: float | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "radius": float(f"{self.radius:.12g}"),
            "residual": self.residual,
            "bonds": self.source_bonds.to_dict(),
            "status": self.status,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HardenedPoint":
        return cls(
            Configuration.from_dict(d["config"]),
            float(d["radius"]),
            float(d["residual"]),
            BondNetwork.from_dict(d["bonds"]),
            d.get("status", "ok"),
            d.get("eps"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _bond_arrays(b: BondNetwork):
    pairs = np.array(sorted(b.disk_edges), dtype=int).reshape(-1, 2)
    walls = sorted(b.wall_edges)
    widx = np.array([i for i, _ in walls], dtype=int)
    wnorm = np.array([WALL_NORMALS[w] for _, w in walls], dtype=float).reshape(-1, 2)
    # inward distance to wall w is off + n_w . x with off = 1 for R/T, 0 for L/B
    woff = np.array([1.0 if w in ("R", "T") else 0.0 for _, w in walls])
    return pairs, widx, -wnorm, woff


def bond_lengths(x: np.ndarray, b: BondNetwork) -> np.ndarray:
    """Wall distances and halved pair distances, in ``b.bonds`` order."""
    P = x.reshape(-1, 2)
    pairs, widx, wdir, woff = _bond_arrays(b)
    half = np.linalg.norm(P[pairs[:, 0]] - P[pairs[:, 1]], axis=1) / 2 if len(pairs) else np.zeros(0)
    wl = woff + (P[widx] * wdir).sum(1) if len(widx) else np.zeros(0)
    return np.concatenate([half, wl])


def _residual_jac(x, s, b):
    """Residuals ``length - s`` and their Jacobian in ``(x, s)``."""
    P = x.reshape(-1, 2)
    pairs, widx, wdir, woff = _bond_arrays(b)
    npair = len(pairs)
    m = npair + len(widx)
    J = np.zeros((m, x.size + 1))
    res = np.empty(m)
    if npair:
        u = P[pairs[:, 0]] - P[pairs[:, 1]]
        d = np.sqrt((u**2).sum(1))
        res[:npair] = d / 2 - s
        gu = u / (2 * d[:, None])
        rows = np.arange(npair)
        for k in range(2):
            J[rows, 2 * pairs[:, 0] + k] = gu[:, k]
            J[rows, 2 * pairs[:, 1] + k] = -gu[:, k]
    if len(widx):
        rows = np.arange(npair, m)
        res[npair:] = woff + (P[widx] * wdir).sum(1) - s
        for k in range(2):
            J[rows, 2 * widx + k] = wdir[:, k]
    J[:, -1] = -1.0
    return res, J


def _stress_hessian(x, b, lam):
    """``sum_b lam_b * Hess(length_b)``; only disk-disk bonds curve."""
    P = x.reshape(-1, 2)
    pairs, _, _, _ = _bond_arrays(b)
    K = np.zeros((x.size, x.size))
    for k, (i, j) in enumerate(pairs):
        u = P[i] - P[j]
        d = np.linalg.norm(u)
        e = u / d
        blk = lam[k] * (np.eye(2) - np.outer(e, e)) / (2 * d)
        K[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] += blk
        K[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] += blk
        K[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] -= blk
        K[2 * j : 2 * j + 2, 2 * i : 2 * i + 2] -= blk
    return K


def softened_stress(x, b, h: float) -> np.ndarray:
    """Bond multipliers read off the softened forces, ``length^(-h-1)``, normalized."""
    ell = bond_lengths(x, b)
    logw = -(h + 1.0) * np.log(ell)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def balance_refine(x, s, b, lam, iters=50):
    """Newton on the stationarity system of the radius over the contact family.

    Unknowns ``(x, s, lam)``; equations ``length_b(x) = s``,
    ``sum_b lam_b grad length_b(x) = 0`` and ``sum(lam) = 1``.  Steps are
    minimum-norm so free directions (rattlers) stay put.
    """
    n2 = x.size
    m = len(lam)
    z = np.concatenate([x, [s], lam])
    for _ in range(iters):
        xx, ss, ll = z[:n2], z[n2], z[n2 + 1 :]
        res, J = _residual_jac(xx, ss, b)
        Jx = J[:, :-1]
        r2 = Jx.T @ ll
        F = np.concatenate([res, r2, [ll.sum() - 1.0]])
        if np.abs(F).max() < 1e-15:
            break
        K = np.zeros((m + n2 + 1, n2 + 1 + m))
        K[:m, :n2] = Jx
        K[:m, n2] = -1.0
        K[m : m + n2, :n2] = _stress_hessian(xx, b, ll)
        K[m : m + n2, n2 + 1 :] = Jx.T
        K[-1, n2 + 1 :] = 1.0
        step = np.linalg.lstsq(K, -F, rcond=None)[0]
        z = z + step
        if np.abs(step).max() < 1e-16:
            break
    return z[:n2], float(z[n2]), z[n2 + 1 :]


def _cg_springs(x0, s, b, k_tether, anchor, iters=200, tol=1e-26):
    """Polak-Ribiere CG on ``sum(res^2) + k |x - anchor|^2`` at fixed ``s``."""

    def fg(x):
        res, J = _residual_jac(x, s, b)
        dx = x - anchor
        f = float(res @ res) + k_tether * float(dx @ dx)
        g = 2.0 * (J[:, :-1].T @ res) + 2.0 * k_tether * dx
        return f, g

    x = x0.copy()
    f, g = fg(x)
    d = -g
    for it in range(iters):
        gg = float(g @ g)
        if gg <= tol:
            break
        dn = float(np.linalg.norm(d))
        dh = d / dn
        dphi = float(g @ dh)
        if dphi >= 0:
            d = -g
            dh = d / np.sqrt(gg)
            dphi = -np.sqrt(gg)

        def phi(t):
            ft, gt = fg(x + t * dh)
            return ft, float(gt @ dh)

        t = secant_line_search(phi, min(1e-2, 10 * abs(f / dphi)), f, dphi)
        if t is None:
            break
        x = x + t * dh
        fn, gn = fg(x)
        beta = max(0.0, float(gn @ (gn - g)) / gg)
        if (it + 1) % x.size == 0:
            beta = 0.0
        d = -gn + beta * d
        f, g = fn, gn
    return x


def _gauss_newton(x, s, b, iters=30):
    """Joint minimum-norm Gauss-Newton on ``(x, s)`` for the tangency system."""
    z = np.concatenate([x, [s]])
    n2 = x.size
    for _ in range(iters):
        res, J = _residual_jac(z[:n2], z[-1], b)
        if np.abs(res).max() < 1e-15:
            break
        step = np.linalg.lstsq(J, -res, rcond=None)[0]
        z = z + step
        if np.abs(step).max() < 1e-16:
            break
    return z[:n2], float(z[-1])


def harden(
    c: Configuration,
    b: BondNetwork,
    outer_iters: int = OUTER_ITERS,
    k0: float = K0,
    h: float = 50.0,
    refine: bool = True,
) -> HardenedPoint:
    """Relax the spring network of ``b`` until every bond is an exact tangency.

    The spring stage ends with a Gauss-Newton polish.  When the contacts
    leave a family of tangent configurations (fewer independent contacts
    than unknowns), ``refine`` moves along that family to the point where
    the contacts balance, using the softened forces of ``c`` as the starting
    stress.  Raises :class:`HardeningError` when the residual stops
    shrinking (geometrically infeasible bond network).
    """
    if len(b) == 0:
        raise HardeningError("empty bond network")
    x = c.flat
    lengths = bond_lengths(x, b)
    s = float(lengths.mean())
    history = []
    for t in range(outer_iters):
        k_t = k0 * (1.0 - t / outer_iters)
        s_prev = s
        x = _cg_springs(x, s, b, k_t, x.copy(), iters=60)
        lengths = bond_lengths(x, b)
        s = float(lengths.mean())
        resid = float(np.abs(lengths - s).max())
        history.append(resid)
        if resid < RESIDUAL_TOL and abs(s - s_prev) < 1e-12:
            break
        if resid < 1e-7:
            # quadratic polish below finishes faster than more annealing
            break
        if len(history) > 10 and resid > 0.1 * history[-11]:
            break
    x, s = _gauss_newton(x, s, b)
    resid = float(np.abs(bond_lengths(x, b) - s).max())
    if not math.isfinite(resid) or resid > 1e-8 or not 0 < s <= 0.5 + 1e-9:
        raise HardeningError(f"tangency system infeasible (residual {resid:.2e})")
    if refine:
        lam0 = softened_stress(c.flat, b, h)
        xr, sr, lam = balance_refine(x, s, b, lam0)
        rr = float(np.abs(bond_lengths(xr, b) - sr).max())
        if (
            math.isfinite(rr)
            and rr <= 1e-8
            and 0 < sr <= 0.5 + 1e-9
            and np.abs(xr - x).max() < 0.05
            and lam.min() > -1e-9
        ):
            x, s, resid = xr, sr, rr
    if x.min() < -1e-12 or x.max() > 1 + 1e-12:
        raise HardeningError("hardened centers left the square")
    conf = Configuration.from_flat(x)
    return HardenedPoint(conf, s, resid, BondNetwork(b.disk_edges, b.wall_edges, s))


def contact_violations(hp: HardenedPoint, tol: float = OVERLAP_TOL) -> BondNetwork:
    """Unbonded contacts that the hardened point squeezes closer than its radius."""
    near = bonds_within(hp.config, 2 * hp.radius - tol, hp.radius - tol, hp.radius)
    return BondNetwork(
        near.disk_edges - hp.source_bonds.disk_edges,
        near.wall_edges - hp.source_bonds.wall_edges,
        hp.radius,
    )


def tight_bonds(hp: HardenedPoint, tol: float | None = None) -> BondNetwork:
    """Contacts of the hardened point at ``eps -> 0`` (tolerance ``10 * residual``)."""
    tol = max(10 * hp.residual, 1e-10) if tol is None else tol
    r = hp.radius
    return bonds_within(hp.config, 2 * r + 2 * tol, r + tol, r)


class NotBalancedError(ValueError):
    pass


def verify_hard_critical(hp: HardenedPoint) -> BalanceResult:
    """Balance test on the exact contacts of a hardened point.

    Raises :class:`NotBalancedError` for unbalanced points, which are
    optimizer artifacts rather than critical points.
    """
    b = tight_bonds(hp)
    bal = check_balance(b, hp.config)
    if not bal.balanced:
        raise NotBalancedError("hardened configuration is not mechanically balanced")
    return bal


def harden_critical(
    c: Configuration,
    eps: float = EPS_ALL_INDICES,
    ladder=EPS_LADDER,
    max_fixups: int = 4,
):
    """Bond extraction, hardening and verification with an increasing eps ladder.

    Tries ``eps`` and then each larger ladder value; the first bond network
    whose hardened point has no overlaps and is balanced wins.  Returns
    ``(HardenedPoint, BalanceResult)``; raises :class:`HardeningError` if no
    rung succeeds.
    """
    tried = set()
    last_err = None
    for e in [eps] + [v for v in ladder if v > eps]:
        b = extract_bonds(c, e)
        key = (b.disk_edges, b.wall_edges)
        if key in tried or len(b) == 0:
            continue
        tried.add(key)
        try:
            hp = harden(c, b)
            for _ in range(max_fixups):
                extra = contact_violations(hp)
                if len(extra) == 0:
                    break
                b = b.with_bonds(extra.disk_edges, extra.wall_edges)
                hp = harden(hp.config, b)
            else:
                raise HardeningError("overlaps persist after adding contacts")
            bal = verify_hard_critical(hp)
        except (HardeningError, NotBalancedError) as err:
            last_err = err
            continue
        hp.source_bonds = tight_bonds(hp)
        hp.eps = e
        return hp, bal
    raise HardeningError(f"no bond network hardened to a balanced point ({last_err})")
