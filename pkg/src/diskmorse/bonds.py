"""Bond networks, the mechanical-balance test, and index classification.

Disk labels are 0-based throughout.  A wall bond ``(i, w)`` joins disk ``i``
to wall ``w`` in ``{"L", "R", "B", "T"}``; its direction is the outward wall
normal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import WALL_NORMALS, WALLS, Configuration, SquareSymmetry, preliminary_radius
from .energy import EnergyParams, hessian
from .optimize import symmetric_eigenvalues
from .simplex import phase_one, verify_certificate

EPS_MINIMA = 0.001
EPS_ALL_INDICES = 0.01
TAU_REL = 1e-6


def wall_distance(p, wall: str) -> float:
    x, y = p
    return {"L": x, "R": 1.0 - x, "B": y, "T": 1.0 - y}[wall]


@dataclass(frozen=True)
class BondNetwork:
    disk_edges: frozenset = frozenset()
    wall_edges: frozenset = frozenset()
    radius: float = 0.0

    def __post_init__(self):
        de = frozenset(tuple(sorted((int(i), int(j)))) for i, j in self.disk_edges)
        we = frozenset((int(i), str(w)) for i, w in self.wall_edges)
        for i, j in de:
            if i == j:
                raise ValueError("self bond")
        for _, w in we:
            if w not in WALLS:
                raise ValueError(f"unknown wall {w!r}")
        object.__setattr__(self, "disk_edges", de)
        object.__setattr__(self, "wall_edges", we)

    @property
    def bonds(self) -> list:
        """Bonds in a fixed order: disk edges, then wall edges."""
        return sorted(self.disk_edges) + sorted(self.wall_edges)

    def __len__(self):
        return len(self.disk_edges) + len(self.wall_edges)

    def degree(self, n: int) -> np.ndarray:
        deg = np.zeros(n, dtype=int)
        for i, j in self.disk_edges:
            deg[i] += 1
            deg[j] += 1
        for i, _ in self.wall_edges:
            deg[i] += 1
        return deg

    def with_bonds(self, disk_edges=(), wall_edges=(), radius=None) -> "BondNetwork":
        return BondNetwork(
            self.disk_edges | frozenset(disk_edges),
            self.wall_edges | frozenset(wall_edges),
            self.radius if radius is None else radius,
        )

    def transformed(self, g: SquareSymmetry, perm) -> "BondNetwork":
        """Bonds of ``apply_symmetry(c, g, perm)`` given the bonds of ``c``."""
        inv = {int(old): new for new, old in enumerate(perm)}
        return BondNetwork(
            [(inv[i], inv[j]) for i, j in self.disk_edges],
            [(inv[i], g.map_wall(w)) for i, w in self.wall_edges],
            self.radius,
        )

    def to_dict(self) -> dict:
        return {
            "disk_edges": [list(e) for e in sorted(self.disk_edges)],
            "wall_edges": [[i, w] for i, w in sorted(self.wall_edges)],
            "radius": float(f"{self.radius:.12g}"),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BondNetwork":
        return cls(
            [tuple(e) for e in d["disk_edges"]],
            [tuple(e) for e in d["wall_edges"]],
            float(d["radius"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def extract_bonds(c: Configuration, eps: float) -> BondNetwork:
    """Pairs within ``(2 + eps) r`` and walls within ``(1 + eps) r``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = preliminary_radius(c)
    return bonds_within(c, (2.0 + eps) * r, (1.0 + eps) * r, r)


def bonds_within(c: Configuration, pair_cut: float, wall_cut: float, radius: float) -> BondNetwork:
    P = c.centers
    disk = [
        (i, j)
        for i in range(c.n)
        for j in range(i + 1, c.n)
        if np.linalg.norm(P[i] - P[j]) <= pair_cut
    ]
    wall = [(i, w) for i in range(c.n) for w in WALLS if wall_distance(P[i], w) <= wall_cut]
    return BondNetwork(disk, wall, radius)


def bond_directions(b: BondNetwork, c: Configuration) -> np.ndarray:
    """Equilibrium matrix: column ``k`` holds the unit vector(s) of bond ``k``.

    A disk-disk bond contributes ``e_ij`` at disk ``i`` and ``-e_ij`` at disk
    ``j``; a wall bond contributes the outward wall normal at its disk.
    """
    P = c.centers
    bonds = b.bonds
    A = np.zeros((2 * c.n, len(bonds)))
    for k, bond in enumerate(bonds):
        if isinstance(bond[1], str):
            i, w = bond
            A[2 * i : 2 * i + 2, k] = WALL_NORMALS[w]
        else:
            i, j = bond
            e = P[j] - P[i]
            e = e / np.linalg.norm(e)
            A[2 * i : 2 * i + 2, k] = e
            A[2 * j : 2 * j + 2, k] = -e
    return A


@dataclass
class BalanceResult:
    balanced: bool
    weights: np.ndarray | None = None
    degenerate: bool = False
    residual: float = float("nan")
    certificate: np.ndarray | None = None
    forced_zero: list = field(default_factory=list)
    stress_dim: int = 0
    bonds: list = field(default_factory=list)


def check_balance(b: BondNetwork, c: Configuration) -> BalanceResult:
    """Mechanical balance as a linear feasibility problem.

    Balanced means some ``w >= 0`` with ``sum(w) = 1`` puts every disk in
    equilibrium.  Degenerate means a balanced network has a bond that
    carries zero weight in every balancing vector (one feasibility problem
    per bond, ``w_e = 1`` on the unnormalized cone).
    """
    bonds = b.bonds
    if not bonds:
        return BalanceResult(False)
    D = bond_directions(b, c)
    m = len(bonds)
    A = np.vstack([D, np.ones((1, m))])
    rhs = np.zeros(2 * c.n + 1)
    rhs[-1] = 1.0
    res = phase_one(A, rhs)
    if not res.feasible:
        return BalanceResult(False, certificate=res.certificate, residual=res.residual, bonds=bonds)
    w = res.x
    eq_res = float(np.abs(D @ w).max())
    # bonds that no balancing vector can load
    forced = []
    for k in range(m):
        sel = np.zeros((1, m))
        sel[0, k] = 1.0
        r_k = phase_one(np.vstack([D, sel]), np.concatenate([np.zeros(2 * c.n), [1.0]]))
        if not r_k.feasible:
            forced.append(bonds[k])
    s = np.linalg.svd(D, compute_uv=False)
    rank = int((s > 1e-9 * max(1.0, s.max(initial=0.0))).sum())
    return BalanceResult(
        True,
        weights=w,
        degenerate=bool(forced),
        residual=eq_res,
        forced_zero=forced,
        stress_dim=m - rank,
        bonds=bonds,
    )


def is_balanced_certified(b: BondNetwork, c: Configuration) -> bool:
    """Balance decision backed by a verified witness either way."""
    D = bond_directions(b, c)
    m = len(b)
    if m == 0:
        return False
    A = np.vstack([D, np.ones((1, m))])
    rhs = np.zeros(2 * c.n + 1)
    rhs[-1] = 1.0
    res = phase_one(A, rhs)
    if res.feasible:
        return bool(np.abs(A @ res.x - rhs).max() <= 1e-9 and res.x.min() >= 0)
    if not verify_certificate(A, rhs, res.certificate):
        raise RuntimeError("infeasibility certificate failed verification")
    return False


@dataclass
class IndexReport:
    index: int
    method: str
    submanifold_dim: int
    negative_eigenvalues: list
    hessian_index: int | None = None
    cone_index: int | None = None
    rattlers: int = 0
    ill_conditioned: bool = False
    eigenvalues: np.ndarray | None = None


class NotCriticalError(ValueError):
    pass


def rattlers(b: BondNetwork, n: int) -> list[int]:
    return [i for i, d in enumerate(b.degree(n)) if d == 0]


def cone_index(b: BondNetwork, c: Configuration, weights=None) -> tuple[int, int]:
    """Second-order index of the hard-disk radius at a balanced configuration.

    Bond functions are ``d_ij / 2`` and wall distances.  Their gradients span
    ``V``; along ``V``'s orthogonal complement the radius changes at second
    order by the stress-weighted Hessian of the pair terms, which is positive
    semidefinite.  The index is its rank there and its null directions are
    tangent to a critical submanifold.  Returns ``(index, zero_modes)``.
    """
    n = c.n
    D = bond_directions(b, c)
    bonds = b.bonds
    if weights is None:
        bal = check_balance(b, c)
        if not bal.balanced:
            raise NotCriticalError("bond network is not balanced")
        weights = bal.weights
    # gradients of the bond functions; pair bonds carry a factor 1/2
    G = np.zeros_like(D)
    Q = np.zeros((2 * n, 2 * n))
    for k, bond in enumerate(bonds):
        if isinstance(bond[1], str):
            G[:, k] = -D[:, k]
            continue
        i, j = bond
        G[:, k] = -0.5 * D[:, k]
        e = D[2 * i : 2 * i + 2, k]
        d = np.linalg.norm(c.centers[j] - c.centers[i])
        lam = 2.0 * weights[k]  # multiplier of the d/2 gradient
        blk = 0.5 * lam * (np.eye(2) - np.outer(e, e)) / d
        for a_, b_, s in ((i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)):
            Q[2 * a_ : 2 * a_ + 2, 2 * b_ : 2 * b_ + 2] += s * blk
    U, s, _ = np.linalg.svd(G, full_matrices=True)
    rank = int((s > 1e-9 * max(1.0, s.max(initial=0.0))).sum())
    P = U[:, rank:]
    if P.shape[1] == 0:
        return 0, 0
    ev = np.linalg.eigvalsh(P.T @ Q @ P)
    thr = 1e-7 * max(1e-300, float(np.abs(Q).max()))
    return int((ev > thr).sum()), int((np.abs(ev) <= thr).sum())


def classify_index(
    c: Configuration,
    b: BondNetwork,
    p: EnergyParams = EnergyParams(),
    hardened: Configuration | None = None,
    tau_rel: float = TAU_REL,
    require_critical: bool = True,
) -> IndexReport:
    """Index of a critical point from the Hessian of ``E`` at the softened point.

    Eigenvalues below ``-tau`` count toward the index, with
    ``tau = tau_rel * max|eigenvalue|``.  The bond-network (cone) index at the
    hardened point is computed alongside; when the spectrum has eigenvalues
    within a decade of ``tau`` or the two disagree, the cone value is
    reported with ``method="cone"``.
    """
    from .energy import evaluate

    ev = evaluate(c, p, hessian=True)
    if require_critical and float(np.linalg.norm(ev.gradient)) > 1e-5 * max(1.0, ev.value):
        raise NotCriticalError("configuration is not a critical point of E")
    lam = symmetric_eigenvalues(ev.hessian)
    tau = tau_rel * float(np.abs(lam).max())
    h_index = int((lam < -tau).sum())
    near = (np.abs(lam) > tau / 10) & (np.abs(lam) < 10 * tau)
    ill = bool(near.any())
    hc = hardened if hardened is not None else c
    bal = check_balance(b, hc)
    if bal.balanced:
        c_index, zero = cone_index(b, hc, bal.weights)
    else:
        c_index, zero = None, int((np.abs(lam) <= tau).sum())
    n_ratt = len(rattlers(b, c.n))
    if c_index is not None and (ill or c_index != h_index):
        index, method = c_index, "cone"
    else:
        index, method = h_index, "hessian"
    return IndexReport(
        index=index,
        method=method,
        submanifold_dim=max(zero, 2 * n_ratt),
        negative_eigenvalues=[float(v) for v in lam[lam < -tau]],
        hessian_index=h_index,
        cone_index=c_index,
        rattlers=n_ratt,
        ill_conditioned=ill,
        eigenvalues=lam,
    )
