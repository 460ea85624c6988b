"""Saddle points between neighboring minima and descent from saddles.

:func:`neb` relaxes a nudged elastic band between two minima of the
softened energy and refines its climbing image with the squared-gradient
optimizer.  :func:`descend_from_saddle` goes the other way: it steps off an
index-1 point along the unstable direction and flows down to the two
minima it separates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, Configuration, SymmetryClassKey, canonicalize
from .energy import EnergyParams, evaluate, raw_kernel
from .optimize import CONVERGED, DescentSettings, cg_pr_minimize_F, steepest_descent_E

DEFAULT_IMAGES = 24
DESCENT_STEP = 1e-4


class DescentError(RuntimeError):
    """A descent from a saddle did not reach a minimum.

    ``partial`` holds whichever of the two endpoints did converge.
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass
class Band:
    images: np.ndarray  # (K, 2n)
    spring_k: float
    energies: np.ndarray | None = None  # log E per image

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=float)
        if self.images.ndim != 2 or self.images.shape[0] < 8:
            raise ValueError("a band needs at least 8 images")

    @property
    def K(self) -> int:
        return self.images.shape[0]

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.images, axis=0), axis=1)


@dataclass
class SaddleCandidate:
    config: Configuration
    energy: float
    neighbors: tuple
    converged: bool = True
    band: Band | None = None


def _energy_grad(x, h):
    """``log E`` and its gradient.

    The band is relaxed on ``log E``, which has the same critical points and
    saddles as ``E`` but gradients of moderate size even where disks nearly
    overlap.  Even exponents keep ``E`` finite outside the square, so that
    region is treated as infinite.
    """
    if x.min() <= 0.0 or x.max() >= 1.0:
        return math.inf, np.zeros_like(x)
    e, g, _ = raw_kernel(x, h, False)
    if not (math.isfinite(e) and e > 0.0):
        return math.inf, np.zeros_like(x)
    g = g / e
    if not np.all(np.isfinite(g)):
        return math.inf, np.zeros_like(x)
    return math.log(e), g


def _tangent(R, E, i):
    """Upwind tangent: toward the higher neighbor, blended at extrema."""
    tp = R[i + 1] - R[i]
    tm = R[i] - R[i - 1]
    ep, e0, em = E[i + 1], E[i], E[i - 1]
    if ep > e0 > em:
        t = tp
    elif ep < e0 < em:
        t = tm
    else:
        dmax = max(abs(ep - e0), abs(em - e0))
        dmin = min(abs(ep - e0), abs(em - e0))
        t = tp * dmax + tm * dmin if ep > em else tp * dmin + tm * dmax
    nt = np.linalg.norm(t)
    return t / nt if nt > 0 else t


def _band_forces(R, E, G, k, climb):
    K = R.shape[0]
    F = np.zeros_like(R)
    perp = 0.0
    for i in range(1, K - 1):
        tau = _tangent(R, E, i)
        g = G[i]
        g_perp = g - (g @ tau) * tau
        if i == climb:
            F[i] = -g + 2.0 * (g @ tau) * tau
        else:
            spring = k * (np.linalg.norm(R[i + 1] - R[i]) - np.linalg.norm(R[i] - R[i - 1]))
            F[i] = -g_perp + spring * tau
        perp = max(perp, float(np.abs(g_perp).max()))
    return F, perp


def relax_band(
    band: Band,
    p: EnergyParams = EnergyParams(),
    max_iters: int = 3000,
    climb_after: int = 300,
    max_move: float = 2e-3,
):
    """Projected-force relaxation of a band with a climbing highest image.

    Each step moves the interior images along their NEB forces, scaled so
    that no coordinate moves by more than ``max_move``; the scale shrinks
    whenever the band's peak energy goes up.  Returns the relaxed band and
    the index of the climbing image.
    """
    h = float(p.h)
    R = band.images.copy()
    K = R.shape[0]
    E = np.empty(K)
    G = np.empty_like(R)
    for i in range(K):
        E[i], G[i] = _energy_grad(R[i], h)
    if not np.all(np.isfinite(E)):
        raise ValueError("band passes through infinite energy")
    k = band.spring_k
    climb = -1
    step = max_move
    stable = 0
    last_peak = math.inf
    for it in range(max_iters):
        if climb < 0 and (it >= climb_after or stable >= 50):
            climb = int(np.argmax(E[1:-1])) + 1
        F, perp = _band_forces(R, E, G, k, climb)
        if perp <= 1e-6 * max(1.0, float(E.max())) and climb > 0:
            break
        fmax = float(np.abs(F).max())
        if fmax == 0.0 or not math.isfinite(fmax):
            break
        Rn = R.copy()
        Rn[1:-1] += (step / fmax) * F[1:-1]
        En = np.empty(K)
        Gn = np.empty_like(R)
        ok = True
        for i in range(K):
            En[i], Gn[i] = _energy_grad(Rn[i], h)
            if not math.isfinite(En[i]):
                ok = False
                break
        if not ok:
            step *= 0.5
            continue
        peak = float(En[1:-1].max())
        stable = stable + 1 if abs(peak - last_peak) <= 1e-6 * max(1.0, peak) else 0
        last_peak = peak
        R, E, G = Rn, En, Gn
        if climb > 0:
            step = max(step * 0.995, 1e-6)
    return Band(R, k, E), climb


def neb(
    minA: Configuration,
    minB: Configuration,
    p: EnergyParams = EnergyParams(),
    K: int = DEFAULT_IMAGES,
    tol: float = DEFAULT_TOL,
    max_iters: int = 3000,
) -> SaddleCandidate | None:
    """Saddle on a low-energy path between two minima, or ``None``.

    The band starts on the straight segment from ``minA`` to ``minB``.  The
    highest interior image climbs once the band settles and is then refined
    with :func:`~diskmorse.optimize.cg_pr_minimize_F`.  ``None`` is returned
    when the endpoints coincide or the band has no interior maximum; a
    candidate whose refinement fails is returned with ``converged=False``.
    """
    if K < 8:
        raise ValueError("K must be >= 8")
    a, b = minA.flat, minB.flat
    if np.abs(a - b).max() <= tol:
        return None
    h = float(p.h)
    R = np.linspace(a, b, K)
    E = np.array([_energy_grad(r, h)[0] for r in R])
    if not np.all(np.isfinite(E)):
        return None
    seg = np.linalg.norm(b - a) / (K - 1)
    spring = 0.1 * float(np.abs(np.diff(E)).mean()) / seg**2
    band, climb = relax_band(Band(R, max(spring, 1e-12)), p, max_iters=max_iters)
    E = band.energies
    top = int(np.argmax(E))
    if top in (0, K - 1) or E[top] <= max(E[0], E[-1]) * (1 + 1e-12):
        return None
    keys = (canonicalize(minA, tol), canonicalize(minB, tol))
    energy = float(math.exp(E[top]))
    try:
        res = cg_pr_minimize_F(band.images[top], p, DescentSettings(max_iters=5000))
    except ValueError:
        res = None
    if res is None or res.status != CONVERGED:
        return SaddleCandidate(Configuration.from_flat(band.images[top]), energy, keys, False, band)
    return SaddleCandidate(res.config, float(res.energy), keys, True, band)


def unstable_direction(c: Configuration, p: EnergyParams = EnergyParams()) -> np.ndarray:
    """Unit eigenvector of the most negative Hessian eigenvalue."""
    H = evaluate(c, p, hessian=True).hessian
    w, V = np.linalg.eigh(H)
    if w[0] >= 0:
        raise ValueError("configuration has no negative curvature direction")
    return V[:, 0]


def descend_labeled(
    c: Configuration,
    p: EnergyParams = EnergyParams(),
    delta: float = DESCENT_STEP,
    s: DescentSettings = DescentSettings(),
) -> tuple[Configuration, Configuration]:
    """Labeled minima reached from ``c +- delta * v``, ``v`` the unstable direction."""
    v = unstable_direction(c, p)
    x = c.flat
    out = []
    for sign in (1.0, -1.0):
        res = steepest_descent_E(x + sign * delta * v, p, s)
        if not res.converged:
            raise DescentError(f"descent did not converge ({res.status})", tuple(out))
        out.append(res.config)
    return out[0], out[1]


def descend_from_saddle(
    s: SaddleCandidate | Configuration,
    p: EnergyParams = EnergyParams(),
    tol: float = DEFAULT_TOL,
) -> tuple[SymmetryClassKey, SymmetryClassKey]:
    """Canonical keys of the two minima flanking an index-1 point."""
    c = s.config if isinstance(s, SaddleCandidate) else s
    a, b = descend_labeled(c, p)
    return canonicalize(a, tol), canonicalize(b, tol)
