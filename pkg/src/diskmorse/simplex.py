"""Phase-one simplex for small dense feasibility problems ``A w = b, w >= 0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray | None = None
    certificate: np.ndarray | None = None  # y with A^T y <= 0 and b^T y > 0
    residual: float = float("nan")


def phase_one(A, b, tol: float = 1e-11, max_pivots: int = 10000) -> FeasibilityResult:
    """Decide feasibility of ``{w >= 0 : A w = b}`` with Bland's rule.

    On success the returned ``x`` is a basic feasible solution; otherwise a
    Farkas certificate ``y`` is returned satisfying ``A^T y <= 0`` and
    ``b^T y > 0`` (up to ``tol``).
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    As = A * sign[:, None]
    bs = b * sign
    # tableau [As | I | bs], basis = artificials
    T = np.hstack([As, np.eye(m), bs[:, None]])
    basis = list(range(n, n + m))
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    scale = max(1.0, float(np.abs(T).max()))
    eps = tol * scale

    for _ in range(max_pivots):
        cb = cost[basis]
        reduced = cost - cb @ T[:, :-1]
        entering = next((j for j in range(n + m) if reduced[j] < -eps), None)
        if entering is None:
            break
        col = T[:, entering]
        ratios = [
            (T[i, -1] / col[i], basis[i], i) for i in range(m) if col[i] > eps
        ]
        if not ratios:  # pragma: no cover - phase one is bounded below by 0
            break
        best = min(r[0] for r in ratios)
        # Bland: among ties pick the smallest basic variable index
        _, _, row = min((r for r in ratios if r[0] <= best + eps), key=lambda r: r[1])
        T[row] /= T[row, entering]
        for i in range(m):
            if i != row and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[row]
        basis[row] = entering

    x_full = np.zeros(n + m)
    for i, j in enumerate(basis):
        x_full[j] = T[i, -1]
    infeas = float(x_full[n:].sum())
    x = np.clip(x_full[:n], 0.0, None)
    residual = float(np.abs(A @ x - b).max()) if m else 0.0
    if infeas <= 1e3 * eps and residual <= 1e-9 * max(1.0, float(np.abs(b).max(initial=0.0))):
        return FeasibilityResult(True, x, None, residual)

    B = np.hstack([As, np.eye(m)])[:, basis]
    try:
        y = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(B.T, cost[basis], rcond=None)[0]
    # undo the row flips so the certificate refers to the caller's system
    return FeasibilityResult(False, None, y * sign, residual)


def verify_certificate(A, b, y, tol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float)
    s = max(1.0, float(np.abs(y).max()))
    return bool((A.T @ y).max(initial=-np.inf) <= tol * s and b @ y > tol * s)
