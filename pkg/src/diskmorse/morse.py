"""Topology of the configuration space assembled from critical types.

Index-0 and index-1 types form a labeled graph: every labeled minimum is a
vertex and every labeled saddle an edge between the two minima it
separates.  Adding these by decreasing radius gives the dendrogram of path
components.  Counting labeled cells of every index and using the Euler
relation then gives the first Betti number for as long as the space is
homotopy equivalent to a graph.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .bonds import BondNetwork
from .core import WALL_NORMALS, Configuration, apply_symmetry, group_elements
from .energy import EnergyParams
from .optimize import steepest_descent_E
from .saddle import DescentError, descend_labeled

MATCH_TOL = 1e-3
IMAGE_TOL = 1e-6

# Published higher Betti numbers for four disks, one entry per topology
# change; they cannot be obtained from cell counts alone.
REFERENCE_HIGHER_BETTI = {
    4: {
        2: (0, 0, 0, 0, 0, 5, 53, 11),
        3: (0, 0, 0, 0, 0, 0, 0, 6),
    }
}


class InconsistencyError(RuntimeError):
    """Census data that cannot describe a cell decomposition."""


class UnionFind:
    def __init__(self):
        self.parent: list[int] = []
        self.size: list[int] = []
        self.count = 0

    def add(self) -> int:
        self.parent.append(len(self.parent))
        self.size.append(1)
        self.count += 1
        return len(self.parent) - 1

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True


@dataclass
class MorseEvent:
    radius: float
    types: list
    index: int
    cells: dict  # index -> cumulative labeled cell count after this event
    beta0: int | None = None


@dataclass
class Dendrogram:
    """Labeled vertices and edges plus the component count after each event."""

    n: int
    vertex_type: list = field(default_factory=list)
    vertex_birth: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (u, v, radius, type position)
    events: list = field(default_factory=list)
    components: list = field(default_factory=list)
    oracle_components: list = field(default_factory=list)

    def graph_at(self, radius: float):
        """Vertices and edges present for radii just below ``radius``."""
        verts = [k for k, r in enumerate(self.vertex_birth) if r >= radius]
        edges = [(u, v) for u, v, r, _ in self.edges if r >= radius]
        return verts, edges

    def component_structure(self, radius: float) -> list[tuple[int, int]]:
        """``(vertices, edges)`` of every component just below ``radius``."""
        verts, edges = self.graph_at(radius)
        idx = {v: k for k, v in enumerate(verts)}
        labels = _component_labels(len(verts), [(idx[u], idx[v]) for u, v in edges])
        nv = np.bincount(labels, minlength=labels.max(initial=-1) + 1)
        ne = np.zeros_like(nv)
        for u, _ in edges:
            ne[labels[idx[u]]] += 1
        return sorted(zip(nv.tolist(), ne.tolist()), reverse=True)

    def to_dict(self) -> dict:
        return {
            "births": [
                {"radius": e.radius, "count": _event_cells(e, 0)}
                for e in self.events
                if e.index == 0
            ],
            "merges": [
                {"radius": e.radius, "edges": _event_cells(e, 1), "components_after": e.beta0}
                for e in self.events
                if e.index == 1
            ],
            "intervals": [
                {"below_radius": e.radius, "components": e.beta0} for e in self.events
            ],
        }


def _event_cells(e: MorseEvent, k: int) -> int:
    return int(sum(t.orbit for t in e.types if t.index == k))


def _component_labels(nv: int, edges) -> np.ndarray:
    if nv == 0:
        return np.zeros(0, dtype=int)
    if edges:
        u, v = np.array(edges).T
    else:
        u = v = np.zeros(0, dtype=int)
    g = coo_matrix((np.ones(len(u)), (u, v)), shape=(nv, nv))
    return connected_components(g, directed=False)[1]


def order_events(types) -> list:
    """Types sorted by decreasing radius, index ascending within a tie."""
    return sorted(types, key=lambda t: (-round(t.radius, 9), t.index, t.first_sample))


def orbit_images(c: Configuration, tol: float = IMAGE_TOL):
    """Distinct images of a labeled configuration with one group element each."""
    kept, elems = [], []
    for g, perm in group_elements(c.n):
        img = apply_symmetry(c, g, perm).flat
        if kept and np.abs(np.asarray(kept) - img).max(axis=1).min() <= tol:
            continue
        kept.append(img)
        elems.append((g, perm))
    return np.asarray(kept), elems


def type_images(t):
    """One labeled image of ``t``'s softened point per labeled critical set.

    Isolated points use :func:`orbit_images`.  A critical submanifold is
    represented once per connected component, told apart by the labeled
    bond network and rattler regions of the hardened representative.
    """
    if not getattr(t, "submanifold_dim", 0):
        return orbit_images(_soft(t))
    from .census import _labeled_signature, rattler_regions

    bonds = t.representative.source_bonds
    regions = rattler_regions(t.config, bonds)
    seen = set()
    kept, elems = [], []
    soft = _soft(t)
    for g, perm in group_elements(soft.n):
        sig = _labeled_signature(bonds, regions, g, perm)
        if sig in seen:
            continue
        seen.add(sig)
        kept.append(apply_symmetry(soft, g, perm).flat)
        elems.append((g, perm))
    return np.asarray(kept), elems


def _soft(t) -> Configuration:
    return t.softened if t.softened is not None else t.config


def saddle_adjacency(types, p: EnergyParams = EnergyParams()) -> dict:
    """``{position: (minimum A, minimum B)}`` for every index-1 type, by descent."""
    out = {}
    for k, t in enumerate(types):
        if t.index == 1 and not t.degenerate:
            out[k] = descend_type(t, p)
    return out


def descend_type(t, p: EnergyParams = EnergyParams()) -> tuple[Configuration, Configuration]:
    """Labeled minima of the energy at ``p`` on either side of index-1 type ``t``.

    A type whose softened point was found at another exponent
    (``t.hardness``) is descended at that exponent first; the two ends are
    then relaxed at ``p`` so they can be matched with the labeled minima.
    """
    h = getattr(t, "hardness", None)
    if h is None or h == p.h:
        return descend_labeled(_soft(t), p)
    ends = descend_labeled(_soft(t), EnergyParams(h))
    out = []
    for c in ends:
        res = steepest_descent_E(c.flat, p)
        if not res.converged:
            raise DescentError(f"relaxing a descent end at h={p.h} failed ({res.status})", tuple(out))
        out.append(res.config)
    return out[0], out[1]


def build_dendrogram(types, adjacency: dict | None = None, p: EnergyParams = EnergyParams()) -> Dendrogram:
    """Merge tree of path components from non-degenerate index-0/1 types.

    ``adjacency`` maps a position in ``types`` to the two labeled minima
    reached from that saddle's representative; it is computed by descent
    when omitted.  Each saddle image ``g . S`` joins ``g . A`` and ``g . B``.
    """
    types = list(types)
    for t in types:
        if t.degenerate:
            raise ValueError("build_dendrogram expects non-degenerate types")
    n = types[0].config.n if types else 0
    d = Dendrogram(n)
    if adjacency is None:
        adjacency = saddle_adjacency(types, p)
    pos = {id(t): k for k, t in enumerate(types)}
    events = [t for t in order_events(types) if t.index in (0, 1)]

    # all labeled minima, for identifying descent endpoints
    vert_points = []
    for t in events:
        if t.index != 0:
            continue
        imgs, _ = type_images(t)
        if len(imgs) != t.orbit:
            raise InconsistencyError(f"minimum at r={t.radius:.6f}: {len(imgs)} images, orbit {t.orbit}")
        for x in imgs:
            vert_points.append(x)
            d.vertex_type.append(pos[id(t)])
            d.vertex_birth.append(t.radius)
    tree = cKDTree(np.asarray(vert_points)) if vert_points else None

    def vertex_of(x):
        if tree is None:
            raise InconsistencyError("saddle without any minima")
        dist, k = tree.query(x)
        if dist > MATCH_TOL:
            raise InconsistencyError(f"saddle flanks an unknown minimum (distance {dist:.2e})")
        return int(k)

    for t in events:
        if t.index != 1:
            continue
        k = pos[id(t)]
        if k not in adjacency:
            raise InconsistencyError(f"no adjacency for saddle at r={t.radius:.6f}")
        a, b = adjacency[k]
        imgs, elems = type_images(t)
        if len(imgs) != t.orbit:
            raise InconsistencyError(f"saddle at r={t.radius:.6f}: {len(imgs)} images, orbit {t.orbit}")
        for g, perm in elems:
            u = vertex_of(apply_symmetry(a, g, perm).flat)
            v = vertex_of(apply_symmetry(b, g, perm).flat)
            d.edges.append((u, v, t.radius, k))

    uf = UnionFind()
    vid_by_type: dict[int, list[int]] = {}
    for vid, k in enumerate(d.vertex_type):
        vid_by_type.setdefault(k, []).append(vid)
    edges_by_type: dict[int, list] = {}
    for e in d.edges:
        edges_by_type.setdefault(e[3], []).append(e)
    cells = {0: 0, 1: 0}
    for t in events:
        k = pos[id(t)]
        if t.index == 0:
            for _ in vid_by_type[k]:
                uf.add()
        else:
            for u, v, _, _ in edges_by_type.get(k, []):
                uf.union(u, v)
        cells[t.index] += t.orbit
        ev = MorseEvent(t.radius, [t], t.index, dict(cells), uf.count)
        d.events.append(ev)
        d.components.append(uf.count)
        verts, edges = d.graph_at(t.radius)
        idx = {v: j for j, v in enumerate(verts)}
        labels = _component_labels(len(verts), [(idx[a], idx[b]) for a, b in edges])
        d.oracle_components.append(int(labels.max(initial=-1) + 1))
    if d.components != d.oracle_components:
        raise InconsistencyError("union-find disagrees with graph components")
    return d


@dataclass
class BettiRow:
    radius: float
    index: int
    cells: dict
    beta0: int
    beta1: int | None
    beta1_is_bound: bool = False
    higher: dict = field(default_factory=dict)

    @property
    def v(self) -> int:
        return self.cells.get(0, 0)

    @property
    def e(self) -> int:
        return self.cells.get(1, 0)

    @property
    def euler(self) -> int:
        return sum((-1) ** k * c for k, c in self.cells.items())


@dataclass
class BettiTable:
    rows: list
    validity_bound: float | None = None
    excluded: list = field(default_factory=list)

    def column(self, k: int) -> list:
        if k == 0:
            return [r.beta0 for r in self.rows]
        if k == 1:
            return [r.beta1 for r in self.rows]
        return [r.higher.get(k) for r in self.rows]

    def exact_rows(self) -> list:
        return [r for r in self.rows if not r.beta1_is_bound]

    def euler_consistent(self) -> bool:
        """Alternating sum of cells equals that of Betti numbers in every row
        where all Betti numbers are known."""
        for r in self.rows:
            if r.beta1 is None or r.beta1_is_bound:
                continue
            betti = r.beta0 - r.beta1 + sum((-1) ** k * b for k, b in r.higher.items())
            if betti != r.euler:
                return False
        return True

    def to_csv(self, metadata: dict | None = None) -> str:
        buf = io.StringIO()
        if metadata is not None:
            buf.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        ks = sorted({k for r in self.rows for k in r.higher})
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "index", "v", "e", "beta0", "beta1", "beta1_is_bound"] + [f"beta{k}" for k in ks])
        for r in self.rows:
            w.writerow(
                [f"{r.radius:.6f}", r.index, r.v, r.e, r.beta0, "" if r.beta1 is None else r.beta1, int(r.beta1_is_bound)]
                + [r.higher.get(k, "") for k in ks]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "validity_bound": self.validity_bound,
            "rows": [
                {
                    "radius": r.radius,
                    "index": r.index,
                    "cells": {str(k): c for k, c in sorted(r.cells.items())},
                    "beta0": r.beta0,
                    "beta1": r.beta1,
                    "beta1_is_bound": r.beta1_is_bound,
                    **{f"beta{k}": b for k, b in sorted(r.higher.items())},
                }
                for r in self.rows
            ],
        }


def is_contractible(t) -> bool:
    """Isolated critical points are contractible; submanifolds report their own flag."""
    return bool(getattr(t, "contractible", True))


def betti_table(types, d: Dendrogram, higher_betti: dict | None = None) -> BettiTable:
    """Betti numbers after every topology change.

    ``beta1 = beta0 - v + e`` while only 0- and 1-cells are attached.  After
    the first cell of index 2 or more, ``beta1`` is reported as an upper
    bound (the last exact value plus any 1-cells attached since) unless
    ``higher_betti`` supplies ``{k: column values}`` for every ``k >= 2``,
    in which case the alternating Euler relation determines it.
    """
    types = [t for t in order_events(types) if not t.degenerate]
    excluded = [t for t in types if not is_contractible(t)]
    if excluded:
        warnings.warn(f"{len(excluded)} non-contractible critical submanifold type(s) left out of the cell count")
    types = [t for t in types if is_contractible(t)]
    beta0_at = {}
    for ev in d.events:
        beta0_at[id(ev.types[0])] = ev.beta0
    if higher_betti is not None and any(len(v) != len(types) for v in higher_betti.values()):
        raise ValueError("higher Betti columns must have one entry per event")
    cells: dict[int, int] = {}
    beta0 = 0
    rows = []
    last_exact = None
    bound = None
    ones_since = 0
    for j, t in enumerate(types):
        cells[t.index] = cells.get(t.index, 0) + t.orbit
        if t.index in (0, 1):
            if id(t) not in beta0_at:
                raise InconsistencyError("dendrogram is missing an index-0/1 type")
            beta0 = beta0_at[id(t)]
        if t.index >= 2 and bound is None:
            bound = t.radius
        chi = sum((-1) ** k * c for k, c in cells.items())
        higher = {}
        if higher_betti is not None:
            higher = {k: int(col[j]) for k, col in sorted(higher_betti.items())}
            beta1 = beta0 + sum((-1) ** k * b for k, b in higher.items()) - chi
            is_bound = False
        elif bound is None:
            beta1 = beta0 - chi
            last_exact = beta1
            is_bound = False
        else:
            if t.index == 1:
                ones_since += t.orbit
            beta1 = None if last_exact is None else last_exact + ones_since
            is_bound = True
        if beta1 is not None and beta1 < 0:
            raise InconsistencyError(f"negative beta1 at r={t.radius:.6f}; census incomplete?")
        rows.append(BettiRow(t.radius, t.index, dict(sorted(cells.items())), beta0, beta1, is_bound, higher))
    return BettiTable(rows, bound, excluded)


# ---------------------------------------------------------------- rendering


def configuration_svg(c: Configuration, radius: float, bonds: BondNetwork | None = None, size: int = 160) -> str:
    """Disks in the unit square with tangencies drawn as segments."""
    s = float(size)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="-2 -2 {s + 4} {s + 4}">',
        f'<rect x="0" y="0" width="{s}" height="{s}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]

    def xy(p):
        return p[0] * s, (1.0 - p[1]) * s

    for k, p in enumerate(c.centers):
        x, y = xy(p)
        parts.append(
            f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{radius * s:.3f}" fill="#cfe0f3" stroke="#24507a"/>'
            f'<text x="{x:.3f}" y="{y + 4:.3f}" font-size="10" text-anchor="middle">{k}</text>'
        )
    if bonds is not None:
        for i, j in sorted(bonds.disk_edges):
            (x1, y1), (x2, y2) = xy(c.centers[i]), xy(c.centers[j])
            parts.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" stroke="#b22" stroke-width="1.5"/>')
        for i, w in sorted(bonds.wall_edges):
            p = np.asarray(c.centers[i])
            q = p + radius * np.asarray(WALL_NORMALS[w], dtype=float)
            (x1, y1), (x2, y2) = xy(p), xy(q)
            parts.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" stroke="#b22" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def dendrogram_svg(d: Dendrogram, width: int = 640, height: int = 360) -> str:
    """Step plot of the number of components against decreasing radius."""
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if not d.events:
        parts.append("</svg>")
        return "\n".join(parts)
    radii = [e.radius for e in d.events]
    r_hi, r_lo = max(radii) + 0.005, min(radii) - 0.005
    cmax = max(max(d.components), 1)
    m = 40

    def X(r):
        return m + (r_hi - r) / (r_hi - r_lo) * (width - 2 * m)

    def Y(c):
        return height - m - math.log1p(c) / math.log1p(cmax) * (height - 2 * m)

    pts = [(X(r_hi), Y(0))]
    for e in d.events:
        pts.append((X(e.radius), pts[-1][1]))
        pts.append((X(e.radius), Y(e.beta0)))
    pts.append((X(r_lo), pts[-1][1]))
    path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    parts.append(f'<polyline points="{path}" fill="none" stroke="#24507a" stroke-width="2"/>')
    for e in d.events:
        colour = "#2a7" if e.index == 0 else "#b22"
        parts.append(
            f'<line x1="{X(e.radius):.2f}" y1="{m}" x2="{X(e.radius):.2f}" y2="{height - m}" stroke="{colour}" stroke-dasharray="3,3"/>'
            f'<text x="{X(e.radius):.2f}" y="{m - 6}" font-size="9" text-anchor="middle">{e.radius:.4f}</text>'
            f'<text x="{X(e.radius) + 3:.2f}" y="{Y(e.beta0) - 3:.2f}" font-size="9">{e.beta0}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 8}" font-size="11" text-anchor="middle">radius (decreasing)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def render_report(d: Dendrogram, bt: BettiTable, out, types=(), metadata: dict | None = None) -> list[Path]:
    """Write configuration SVGs, the dendrogram SVG/JSON and the Betti CSV/JSON."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    meta = metadata or {}
    written = []

    def put(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    put("dendrogram.svg", dendrogram_svg(d))
    put("dendrogram.json", json.dumps({"metadata": meta, **d.to_dict()}, indent=1))
    put("betti.csv", bt.to_csv(meta))
    put("betti.json", json.dumps({"metadata": meta, **bt.to_dict()}, indent=1))
    for k, t in enumerate(types):
        put(
            f"type_{k:02d}_r{t.radius:.4f}_i{t.index}.svg",
            configuration_svg(t.config, t.radius, t.representative.source_bonds),
        )
    return written
