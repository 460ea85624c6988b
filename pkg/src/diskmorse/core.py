"""Configurations of labeled disk centers in the unit square and their symmetries.

The symmetry group acting on labeled configurations is the product of the
dihedral group of the square (8 elements) with the symmetric group on the
disk labels, for a total of ``8 * n!`` elements.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_TOL = 1e-4

# integer matrices acting on (p - 1/2); the order fixes the element ids 0..7
_SQUARE_MATRICES = {
    "identity": ((1, 0), (0, 1)),
    "rot90": ((0, -1), (1, 0)),
    "rot180": ((-1, 0), (0, -1)),
    "rot270": ((0, 1), (-1, 0)),
    "flip_x": ((-1, 0), (0, 1)),
    "flip_y": ((1, 0), (0, -1)),
    "transpose": ((0, 1), (1, 0)),
    "antitranspose": ((0, -1), (-1, 0)),
}

WALLS = ("L", "R", "B", "T")
WALL_NORMALS = {
    "L": (-1.0, 0.0),
    "R": (1.0, 0.0),
    "B": (0.0, -1.0),
    "T": (0.0, 1.0),
}


class AmbiguousOrbitError(ValueError):
    """Raised when orbit elements are too close to be told apart at the given tolerance."""


@dataclass(frozen=True)
class Configuration:
    """Ordered (labeled) disk centers; row ``i`` holds disk ``i``."""

    centers: np.ndarray

    def __post_init__(self):
        arr = np.array(self.centers, dtype=float).reshape(-1, 2)
        if arr.shape[0] < 1:
            raise ValueError("a configuration needs at least one disk")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite coordinate")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("coordinates must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "centers", arr)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.centers.reshape(-1).copy()

    @classmethod
    def from_flat(cls, x) -> "Configuration":
        return cls(np.clip(np.asarray(x, dtype=float), 0.0, 1.0).reshape(-1, 2))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "centers": [[_sig12(x), _sig12(y)] for x, y in self.centers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Configuration":
        conf = cls(np.asarray(d["centers"], dtype=float))
        if conf.n != int(d["n"]):
            raise ValueError(f"n={d['n']} but {conf.n} centers given")
        return conf

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Configuration":
        return cls.from_dict(json.loads(s))

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.centers.shape == other.centers.shape and bool(
            np.array_equal(self.centers, other.centers)
        )

    def __hash__(self):
        return hash(self.centers.tobytes())


def _sig12(v: float) -> float:
    return float(f"{v:.12g}")


@dataclass(frozen=True)
class SquareSymmetry:
    """One of the eight isometries of the unit square."""

    name: str

    def __post_init__(self):
        if self.name not in _SQUARE_MATRICES:
            raise ValueError(f"unknown square symmetry {self.name!r}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(_SQUARE_MATRICES[self.name], dtype=float)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts - 0.5) @ self.matrix.T + 0.5

    def compose(self, other: "SquareSymmetry") -> "SquareSymmetry":
        """Return ``self o other`` (apply ``other`` first)."""
        m = self.matrix @ other.matrix
        for name, mat in _SQUARE_MATRICES.items():
            if np.array_equal(np.array(mat, dtype=float), m):
                return SquareSymmetry(name)
        raise AssertionError("dihedral group not closed")  # pragma: no cover

    def inverse(self) -> "SquareSymmetry":
        for g in square_group():
            if g.compose(self).name == "identity":
                return g
        raise AssertionError("no inverse")  # pragma: no cover

    def map_wall(self, wall: str) -> str:
        normal = self.matrix @ np.array(WALL_NORMALS[wall])
        for w, nrm in WALL_NORMALS.items():
            if np.allclose(normal, nrm):
                return w
        raise AssertionError("wall normal not mapped to a wall")  # pragma: no cover


def square_group() -> list[SquareSymmetry]:
    return [SquareSymmetry(name) for name in _SQUARE_MATRICES]


def preliminary_radius(c: Configuration) -> float:
    """Largest radius at which the disks neither overlap nor leave the square."""
    pts = c.centers
    wall = float(np.min(np.minimum(pts, 1.0 - pts)))
    if c.n == 1:
        return wall
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(c.n, 1)
    return min(wall, float(dist[iu].min()) / 2.0)


def apply_symmetry(c: Configuration, g: SquareSymmetry, perm=None) -> Configuration:
    """Center ``i`` of the result is ``g`` applied to center ``perm[i]`` of ``c``.

    ``perm`` is 0-based; ``None`` means the identity relabeling.
    """
    if perm is None:
        perm = range(c.n)
    perm = np.asarray(list(perm), dtype=int)
    if sorted(perm.tolist()) != list(range(c.n)):
        raise ValueError("perm must be a bijection on the disk labels")
    return Configuration(np.clip(g.apply(c.centers[perm]), 0.0, 1.0))


def group_elements(n: int):
    """Iterate over all ``(g, perm)`` pairs of the group of order ``8 * n!``."""
    for g in square_group():
        for perm in itertools.permutations(range(n)):
            yield g, perm


@dataclass(frozen=True)
class SymmetryClassKey:
    """Orbit representative plus the quantized grid used for hashing."""

    canonical: Configuration
    tol: float
    grid: tuple = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, SymmetryClassKey):
            return NotImplemented
        return self.grid == other.grid

    def __hash__(self):
        return hash(self.grid)

    def matches(self, other: "SymmetryClassKey", tol: float | None = None) -> bool:
        """Tolerance-based orbit match that is immune to grid-boundary flips."""
        tol = self.tol if tol is None else tol
        return same_orbit(self.canonical, other.canonical, tol)


def _quantize(pts: np.ndarray, tol: float) -> np.ndarray:
    return np.rint(pts / tol).astype(np.int64)


def canonicalize(c: Configuration, tol: float = DEFAULT_TOL) -> SymmetryClassKey:
    """Deterministic representative of the orbit of ``c``.

    Every square symmetry is applied, the centers are sorted lexicographically
    on a grid of pitch ``tol``, and the least sorted list wins.  Relabelings
    are absorbed by the sort.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    best_grid = None
    best_pts = None
    for g in square_group():
        pts = g.apply(c.centers)
        q = _quantize(pts, tol)
        order = np.lexsort((q[:, 1], q[:, 0]))
        grid = tuple(map(tuple, q[order].tolist()))
        if best_grid is None or grid < best_grid:
            best_grid, best_pts = grid, pts[order]
    return SymmetryClassKey(Configuration(np.clip(best_pts, 0.0, 1.0)), tol, best_grid)


def _match_distance(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Bottleneck-ish assignment: minimise total squared distance, report the max."""
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].max())), cols


def find_symmetry(a: Configuration, b: Configuration, tol: float = DEFAULT_TOL):
    """Return ``(g, perm)`` with ``apply_symmetry(a, g, perm) ~= b`` or ``None``."""
    if a.n != b.n:
        return None
    for g in square_group():
        ga = g.apply(a.centers)
        dist, cols = _match_distance(b.centers, ga)
        if dist <= tol:
            return g, tuple(int(k) for k in cols)
    return None


def same_orbit(a: Configuration, b: Configuration, tol: float = DEFAULT_TOL) -> bool:
    return find_symmetry(a, b, tol) is not None


def stabilizer(c: Configuration, tol: float = DEFAULT_TOL) -> list:
    """Group elements fixing ``c`` (as labeled configuration) within ``tol``.

    Raises :class:`AmbiguousOrbitError` when an element maps ``c`` close to
    itself but outside the exact-match window ``tol / 100``.
    """
    exact = tol * 1e-2
    stab = []
    for g in square_group():
        dist, cols = _match_distance(c.centers, g.apply(c.centers))
        if dist <= exact:
            stab.append((g, tuple(int(k) for k in cols)))
        elif dist <= tol:
            raise AmbiguousOrbitError(
                f"{g.name} maps the configuration within {dist:.2e} of itself"
            )
    return stab


def orbit_size(c: Configuration, tol: float = DEFAULT_TOL) -> int:
    """Number of distinct labeled configurations equivalent to ``c``."""
    _check_distinct(c, tol)
    return 8 * math.factorial(c.n) // len(stabilizer(c, tol))


def _check_distinct(c: Configuration, tol: float):
    if c.n > 1:
        diff = c.centers[:, None, :] - c.centers[None, :, :]
        d = np.sqrt((diff**2).sum(-1))
        d[np.diag_indices(c.n)] = np.inf
        if d.min() <= tol:
            raise AmbiguousOrbitError("two centers coincide within tol")


def expand_configurations(c: Configuration, tol: float = DEFAULT_TOL) -> list[Configuration]:
    """All distinct labeled configurations in the orbit of ``c``, in group order."""
    _check_distinct(c, tol)
    images = np.array(
        [apply_symmetry(c, g, perm).flat for g, perm in group_elements(c.n)]
    )
    keep = []
    for k, img in enumerate(images):
        if keep and np.abs(images[keep] - img).max(axis=1).min() <= tol:
            continue
        keep.append(k)
    out = [Configuration.from_flat(images[k]) for k in keep]
    expected = orbit_size(c, tol)
    if len(out) != expected:
        raise AmbiguousOrbitError(
            f"orbit enumeration found {len(out)} images, stabilizer predicts {expected}"
        )
    return out
