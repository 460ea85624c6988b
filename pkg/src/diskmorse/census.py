"""Seeded sampling campaigns and their reduction to symmetry types.

A campaign runs one optimizer per sample from the start point seeded by
``base_seed + k``.  Converged softened points are grouped by canonical key,
each group is hardened once, and hardened points are merged into
:class:`CriticalType` records.  Grouping only uses the smallest sample
index of every group, so the result does not depend on how the samples
were split across workers.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .bonds import EPS_ALL_INDICES, EPS_MINIMA, BondNetwork, NotCriticalError, check_balance, classify_index
from .core import (
    DEFAULT_TOL,
    AmbiguousOrbitError,
    Configuration,
    SymmetryClassKey,
    canonicalize,
    expand_configurations,
    orbit_size,
    same_orbit,
    square_group,
)
from .energy import EnergyParams
from .harden import HardenedPoint, HardeningError, harden_critical
from .optimize import DescentSettings, cg_pr_minimize_F, steepest_descent_E

MINIMA_ONLY = "minima_only"
ALL_INDICES = "all_indices"
PIPELINES = (MINIMA_ONLY, ALL_INDICES)

MIN_PAIR_DISTANCE = 0.05
MIN_WALL_DISTANCE = 0.025
RADIUS_MATCH = 1e-7
NEB_CUTOFF = 0.6
CENSUS_FORMAT = 1


@dataclass(frozen=True)
class CampaignSpec:
    n: int
    samples: int
    base_seed: int = 0
    pipeline: str = MINIMA_ONLY
    params: EnergyParams = EnergyParams()
    settings: DescentSettings = DescentSettings()
    eps: float | None = None  # None -> EPS_MINIMA or EPS_ALL_INDICES by pipeline
    tol: float = DEFAULT_TOL
    neb_cutoff: float | None = None  # None -> NEB_CUTOFF for all_indices, 0 (no bands) for minima_only

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.neb_cutoff is not None and self.neb_cutoff < 0:
            raise ValueError("neb_cutoff must be >= 0")

    @property
    def band_cutoff(self) -> float:
        if self.neb_cutoff is not None:
            return self.neb_cutoff
        return 0.0 if self.pipeline == MINIMA_ONLY else NEB_CUTOFF

    @property
    def bond_eps(self) -> float:
        if self.eps is not None:
            return self.eps
        return EPS_MINIMA if self.pipeline == MINIMA_ONLY else EPS_ALL_INDICES

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "base_seed": self.base_seed,
            "pipeline": self.pipeline,
            "hardness": self.params.h,
            "eps": self.bond_eps,
            "tol": self.tol,
            "neb_cutoff": self.band_cutoff,
            "max_iters": self.settings.max_iters,
            "grad_tol": self.settings.grad_tol,
            "f_tol": self.settings.f_tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignSpec":
        s = DescentSettings(
            max_iters=int(d.get("max_iters", 20000)),
            grad_tol=float(d.get("grad_tol", 1e-8)),
            f_tol=float(d.get("f_tol", 1e-6)),
        )
        return cls(
            n=int(d["n"]),
            samples=int(d["samples"]),
            base_seed=int(d.get("base_seed", 0)),
            pipeline=d.get("pipeline", MINIMA_ONLY),
            params=EnergyParams(float(d.get("hardness", 50.0))),
            settings=s,
            eps=d.get("eps"),
            tol=float(d.get("tol", DEFAULT_TOL)),
            neb_cutoff=float(d.get("neb_cutoff", 0.0)),
        )


@dataclass
class CriticalType:
    key: SymmetryClassKey
    representative: HardenedPoint
    index: int
    degenerate: bool
    submanifold_dim: int
    orbit: int
    hits: int
    softened: Configuration | None = None
    first_sample: int = 0
    method: str = "hessian"
    hessian_index: int | None = None
    cone_index: int | None = None
    stress_dim: int = 0
    weights: list = field(default_factory=list)
    forced_zero: list = field(default_factory=list)
    rattlers: int = 0
    contractible: bool = True
    hardness: float | None = None
    origin: dict | None = None

    @property
    def radius(self) -> float:
        return self.representative.radius

    @property
    def config(self) -> Configuration:
        return self.representative.config

    def to_dict(self) -> dict:
        return {
            "radius": float(f"{self.radius:.12g}"),
            "index": self.index,
            "degenerate": self.degenerate,
            "submanifold_dim": self.submanifold_dim,
            "orbit": self.orbit,
            "hits": self.hits,
            "first_sample": self.first_sample,
            "method": self.method,
            "hessian_index": self.hessian_index,
            "cone_index": self.cone_index,
            "stress_dim": self.stress_dim,
            "weights": [float(f"{w:.12g}") for w in self.weights],
            "forced_zero": [list(b) for b in self.forced_zero],
            "rattlers": self.rattlers,
            "contractible": self.contractible,
            "hardness": self.hardness,
            "origin": self.origin,
            "representative": self.representative.to_dict(),
            "softened": self.softened.to_dict() if self.softened is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict, tol: float = DEFAULT_TOL) -> "CriticalType":
        hp = HardenedPoint.from_dict(d["representative"])
        soft = d.get("softened")
        return cls(
            key=canonicalize(hp.config, tol),
            representative=hp,
            index=int(d["index"]),
            degenerate=bool(d["degenerate"]),
            submanifold_dim=int(d["submanifold_dim"]),
            orbit=int(d["orbit"]),
            hits=int(d["hits"]),
            softened=Configuration.from_dict(soft) if soft else None,
            first_sample=int(d.get("first_sample", 0)),
            method=d.get("method", "hessian"),
            hessian_index=d.get("hessian_index"),
            cone_index=d.get("cone_index"),
            stress_dim=int(d.get("stress_dim", 0)),
            weights=list(d.get("weights", [])),
            forced_zero=[tuple(b) for b in d.get("forced_zero", [])],
            rattlers=int(d.get("rattlers", 0)),
            contractible=bool(d.get("contractible", True)),
            hardness=None if d.get("hardness") is None else float(d["hardness"]),
            origin=d.get("origin"),
        )


@dataclass
class SampleOutcome:
    sample: int
    status: str
    point: np.ndarray | None = None


@dataclass
class SoftGroup:
    """Softened critical points sharing a canonical key."""

    first_sample: int
    point: np.ndarray
    hits: int


@dataclass
class Census:
    """Result of a campaign: the merged types plus bookkeeping."""

    spec: CampaignSpec | None
    types: list
    failures: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.types)

    def __len__(self):
        return len(self.types)

    def __getitem__(self, k):
        return self.types[k]

    def to_dict(self) -> dict:
        return {
            "format": CENSUS_FORMAT,
            "metadata": self.spec.to_dict() if self.spec is not None else {},
            "failures": dict(sorted(self.failures.items())),
            "types": [t.to_dict() for t in self.types],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Census":
        if "types" not in d:
            raise ValueError("census is missing the 'types' list")
        meta = d.get("metadata") or {}
        spec = CampaignSpec.from_dict(meta) if meta else None
        tol = spec.tol if spec is not None else DEFAULT_TOL
        types = []
        for k, t in enumerate(d["types"]):
            try:
                types.append(CriticalType.from_dict(t, tol))
            except (KeyError, TypeError, ValueError) as err:
                raise ValueError(f"malformed type entry {k}: {err}") from err
        return cls(spec, types, dict(d.get("failures", {})))

    def to_csv(self) -> str:
        return summary_csv(self.types, self.spec)


def start_point(n: int, seed: int) -> np.ndarray:
    """Uniform start in the square with overlapping starts resampled.

    Starts with two centers closer than ``MIN_PAIR_DISTANCE`` or a center
    closer than ``MIN_WALL_DISTANCE`` to a wall overflow the energy at large
    hardness, so they are redrawn from the same stream.
    """
    rng = np.random.default_rng(seed)
    while True:
        x = rng.random(2 * n)
        if x.min() < MIN_WALL_DISTANCE or x.max() > 1.0 - MIN_WALL_DISTANCE:
            continue
        P = x.reshape(n, 2)
        if n > 1:
            d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
            if d[np.triu_indices(n, 1)].min() < MIN_PAIR_DISTANCE:
                continue
        return x


def run_sample(spec: CampaignSpec, k: int, x0=None) -> SampleOutcome:
    """Optimize from the seeded start of sample ``k`` (or from ``x0``)."""
    if x0 is None:
        x0 = start_point(spec.n, spec.base_seed + k)
    try:
        if spec.pipeline == MINIMA_ONLY:
            res = steepest_descent_E(x0, spec.params, spec.settings)
        else:
            res = cg_pr_minimize_F(x0, spec.params, spec.settings)
    except (ValueError, FloatingPointError):
        return SampleOutcome(k, "domain_error")
    if not res.converged:
        return SampleOutcome(k, res.status)
    return SampleOutcome(k, "ok", res.point)


def run_samples(spec: CampaignSpec, ks, starts=None) -> list[SampleOutcome]:
    if starts is None:
        return [run_sample(spec, k) for k in ks]
    return [run_sample(spec, k, x0) for k, x0 in zip(ks, starts)]


def reduce_outcomes(outcomes, tol: float = DEFAULT_TOL, groups=None, failures=None):
    """Fold sample outcomes into softened groups and failure counts.

    Folding is associative and order independent: each group keeps the
    point of its smallest sample index.
    """
    groups = {} if groups is None else groups
    failures = Counter() if failures is None else failures
    for o in outcomes:
        if o.status != "ok":
            failures[o.status] += 1
            continue
        try:
            key = canonicalize(Configuration.from_flat(o.point), tol).grid
        except ValueError:
            failures["invalid_point"] += 1
            continue
        g = groups.get(key)
        if g is None:
            groups[key] = SoftGroup(o.sample, o.point, 1)
        else:
            g.hits += 1
            if o.sample < g.first_sample:
                g.first_sample, g.point = o.sample, o.point
    return groups, failures


def merge_groups(a: dict, b: dict) -> dict:
    out = {k: replace(v) for k, v in a.items()}
    for k, g in b.items():
        if k not in out:
            out[k] = replace(g)
            continue
        cur = out[k]
        if g.first_sample < cur.first_sample:
            cur.first_sample, cur.point = g.first_sample, g.point
        cur.hits += g.hits
    return out


def rattler_regions(c: Configuration, b: BondNetwork, grid: int = 200, slack: float = 1e-3) -> dict:
    """Free region of every rattler among the bonded disks.

    With the bonded disks held fixed, the centers available to a disk of
    the same radius form a union of regions; a rattler cannot leave its
    region, so regions separate components of a critical submanifold.  Each
    region is described by the walls it reaches and the bonded disks it
    borders, which is invariant under relabeling and square symmetry.
    Returns ``{rattler: (walls, disks)}`` with both entries sorted tuples.
    """
    from scipy import ndimage

    free_disks = [i for i, d in enumerate(b.degree(c.n)) if d == 0]
    if not free_disks:
        return {}
    r = b.radius
    fixed = [j for j in range(c.n) if j not in free_disks]
    t = (np.arange(grid) + 0.5) / grid
    X, Y = np.meshgrid(t, t, indexing="ij")
    lo, hi = r * (1 - slack), 1 - r * (1 - slack)
    free = (X >= lo) & (X <= hi) & (Y >= lo) & (Y <= hi)
    P = c.centers
    for j in fixed:
        free &= (X - P[j, 0]) ** 2 + (Y - P[j, 1]) ** 2 >= (2 * r * (1 - slack)) ** 2
    labels, _ = ndimage.label(free)
    reach = 2.0 / grid
    out = {}
    for i in free_disks:
        ix = np.clip((P[i] * grid).astype(int), 0, grid - 1)
        lab = labels[ix[0], ix[1]]
        if lab == 0:
            cells = np.argwhere(labels > 0)
            if len(cells) == 0:
                out[i] = ((), ())
                continue
            d2 = (((cells + 0.5) / grid - P[i]) ** 2).sum(1)
            k = cells[int(np.argmin(d2))]
            lab = labels[k[0], k[1]]
        mask = labels == lab
        xs, ys = X[mask], Y[mask]
        walls = []
        if xs.min() <= lo + reach:
            walls.append("L")
        if xs.max() >= hi - reach:
            walls.append("R")
        if ys.min() <= lo + reach:
            walls.append("B")
        if ys.max() >= hi - reach:
            walls.append("T")
        disks = [j for j in fixed if (((xs - P[j, 0]) ** 2 + (ys - P[j, 1]) ** 2).min() <= (2 * r + reach) ** 2)]
        out[i] = (tuple(sorted(walls)), tuple(disks))
    return out


def _labeled_signature(b: BondNetwork, regions: dict, g, perm):
    t = b.transformed(g, perm)
    inv = {int(old): new for new, old in enumerate(perm)}
    regs = tuple(
        sorted(
            (inv[i], tuple(sorted(g.map_wall(w) for w in walls)), tuple(sorted(inv[j] for j in disks)))
            for i, (walls, disks) in regions.items()
        )
    )
    return (tuple(sorted(t.disk_edges)), tuple(sorted(t.wall_edges)), regs)


def bond_signature(b: BondNetwork, n: int, regions: dict | None = None):
    """Canonical form of a bond network (and rattler regions) under relabeling and square symmetry."""
    regions = regions or {}
    best = None
    for g in square_group():
        for perm in itertools.permutations(range(n)):
            sig = _labeled_signature(b, regions, g, perm)
            if best is None or sig < best:
                best = sig
    return best


def network_orbit_size(b: BondNetwork, n: int, regions: dict | None = None) -> int:
    """Number of distinct labeled bond networks in the orbit of ``b``.

    With ``regions`` from :func:`rattler_regions`, rattlers in different
    free regions are told apart, so the count is the number of connected
    components of a critical submanifold's orbit.
    """
    regions = regions or {}
    seen = set()
    for g in square_group():
        for perm in itertools.permutations(range(n)):
            seen.add(_labeled_signature(b, regions, g, perm))
    return len(seen)


def shares_region(regions: dict) -> bool:
    """True when two rattlers sit in the same free region."""
    return len(set(regions.values())) < len(regions)


def type_orbit(c: Configuration, b: BondNetwork, submanifold_dim: int, tol: float = DEFAULT_TOL, regions=None) -> int:
    """Number of labeled critical points, or components for a submanifold."""
    if regions is None:
        regions = rattler_regions(c, b)
    if submanifold_dim > 0:
        # points of a critical submanifold are not isolated
        return network_orbit_size(b, c.n, regions)
    try:
        return orbit_size(c, tol)
    except AmbiguousOrbitError:
        return network_orbit_size(b, c.n, regions)


def _classify_group(spec: CampaignSpec, g: SoftGroup, params: EnergyParams | None = None):
    """Harden and classify one softened point found at ``params`` (default: the campaign's)."""
    params = spec.params if params is None else params
    soft = Configuration.from_flat(g.point)
    hp, bal = harden_critical(soft, spec.bond_eps)
    rep = classify_index(soft, hp.source_bonds, params, hardened=hp.config)
    regions = rattler_regions(hp.config, hp.source_bonds)
    orbit = type_orbit(hp.config, hp.source_bonds, rep.submanifold_dim, spec.tol, regions)
    return CriticalType(
        key=canonicalize(hp.config, spec.tol),
        representative=hp,
        index=rep.index,
        degenerate=bal.degenerate,
        submanifold_dim=rep.submanifold_dim,
        orbit=orbit,
        hits=g.hits,
        softened=soft,
        first_sample=g.first_sample,
        method=rep.method,
        hessian_index=rep.hessian_index,
        cone_index=rep.cone_index,
        stress_dim=bal.stress_dim,
        weights=[float(w) for w in bal.weights],
        forced_zero=list(bal.forced_zero),
        rattlers=rep.rattlers,
        # two rattlers in one region can circle each other
        contractible=not shares_region(regions),
        hardness=None if params.h == spec.params.h else float(params.h),
    )


def _same_type(a: CriticalType, b: CriticalType, n: int, sig_cache: dict) -> bool:
    if abs(a.radius - b.radius) > RADIUS_MATCH * max(1.0, a.radius):
        return False
    if same_orbit(a.config, b.config, 1e-6):
        return True
    if n > 6:
        return False
    for t in (a, b):
        if id(t) not in sig_cache:
            bonds = t.representative.source_bonds
            sig_cache[id(t)] = bond_signature(bonds, n, rattler_regions(t.config, bonds))
    return sig_cache[id(a)] == sig_cache[id(b)]


def classify_groups(spec: CampaignSpec, groups: dict, workers: int = 1, failures=None):
    """Harden and classify every softened group, then merge equal hardened types."""
    failures = Counter() if failures is None else failures
    ordered = sorted(groups.values(), key=lambda g: g.first_sample)

    def work(g):
        try:
            return _classify_group(spec, g)
        except HardeningError:
            return ("hardening_failed", g.hits)
        except NotCriticalError:
            return ("not_critical", g.hits)
        except AmbiguousOrbitError:
            return ("ambiguous_orbit", g.hits)

    if workers == 1:
        results = [work(g) for g in ordered]
    else:
        results = Parallel(n_jobs=workers)(delayed(work)(g) for g in ordered)
    types: list[CriticalType] = []
    cache: dict = {}
    for r in results:
        if isinstance(r, tuple):
            failures[r[0]] += r[1]
            continue
        for t in types:
            if _same_type(t, r, spec.n, cache):
                t.hits += r.hits
                break
        else:
            types.append(r)
    types.sort(key=lambda t: (-round(t.radius, 9), t.index, t.first_sample))
    return types, failures


def run_campaign(spec: CampaignSpec, workers: int = 1, chunk: int = 256, progress=None, starts=None) -> Census:
    """Run every sample of ``spec`` and merge the results into types.

    ``workers`` parallelizes both the sampling and the hardening; the
    returned census is identical for every worker count.  ``starts`` (an
    array of shape ``(samples, 2n)``) replaces the seeded start points.
    When ``spec.band_cutoff`` is positive, :func:`neb_saddles` then adds
    the saddles found by bands between close minima.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if starts is not None:
        starts = np.asarray(starts, dtype=float)
        if starts.shape != (spec.samples, 2 * spec.n):
            raise ValueError(f"starts must have shape ({spec.samples}, {2 * spec.n})")
    chunks = [range(a, min(a + chunk, spec.samples)) for a in range(0, spec.samples, chunk)]

    def starts_of(ks):
        return None if starts is None else starts[ks.start : ks.stop]

    groups: dict = {}
    failures: Counter = Counter()
    if workers == 1:
        for ks in chunks:
            reduce_outcomes(run_samples(spec, ks, starts_of(ks)), spec.tol, groups, failures)
            if progress is not None:
                progress(ks.stop, spec.samples)
    else:
        par = Parallel(n_jobs=workers, return_as="generator")
        for outs in par(delayed(run_samples)(spec, ks, starts_of(ks)) for ks in chunks):
            reduce_outcomes(outs, spec.tol, groups, failures)
            if progress is not None:
                progress(outs[-1].sample + 1 if outs else 0, spec.samples)
    types, failures = classify_groups(spec, groups, workers, failures)
    census = Census(spec, types, dict(failures))
    if spec.band_cutoff > 0:
        census = neb_saddles(census, spec.band_cutoff, workers=workers)
    return census


def neb_pairs(types, cutoff: float = NEB_CUTOFF) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """``(position in types, start, end)`` for every close pair of labeled minima.

    The start is the softened representative of a non-degenerate minimum
    type and the end is any other labeled minimum within ``cutoff`` of it
    (Euclidean distance in the ``2n`` coordinates).  Pairs are listed once
    per unordered pair of types, in a fixed order.
    """
    from .morse import orbit_images

    mins = [(k, t) for k, t in enumerate(types) if t.index == 0 and not t.degenerate and t.softened is not None]
    images = {k: orbit_images(t.softened)[0] for k, t in mins}
    out = []
    for a, (ka, ta) in enumerate(mins):
        x = ta.softened.flat
        for kb, _ in mins[a:]:
            for y in images[kb]:
                dist = float(np.linalg.norm(y - x))
                if 1e-6 < dist <= cutoff:
                    out.append((ka, x, y))
    return out


def _neb_work(spec: CampaignSpec, x: np.ndarray, y: np.ndarray, h: float):
    from .saddle import neb

    p = EnergyParams(h)
    try:
        a = steepest_descent_E(x, p, spec.settings)
        b = steepest_descent_E(y, p, spec.settings)
        if not (a.converged and b.converged):
            return None
        cand = neb(a.config, b.config, p, tol=spec.tol)
        if cand is None or not cand.converged:
            return None
        return _classify_group(spec, SoftGroup(0, cand.config.flat, 0), p)
    except (HardeningError, NotCriticalError, AmbiguousOrbitError, ValueError, FloatingPointError):
        return None


def neb_saddles(
    census: Census,
    cutoff: float | None = None,
    hardness: tuple | None = None,
    workers: int = 1,
) -> Census:
    """Add the index-1 types found by bands between close minima.

    Random starts can miss saddles whose basin under the squared-gradient
    flow is tiny.  For every pair from :func:`neb_pairs` (``cutoff``
    defaults to ``census.spec.band_cutoff``), both ends are
    relaxed at each exponent of ``hardness`` (default ``(h, 2h)``), a band
    is relaxed between them and its climbing image refined.  The refined
    point is hardened and classified at that exponent.  Index-1 results
    that match no existing type are appended with ``hits == 0`` and an
    ``origin`` recording the pair.  A type found at an exponent other than
    the campaign's stores it in ``hardness``.
    """
    spec = census.spec
    cutoff = spec.band_cutoff if cutoff is None else cutoff
    if hardness is None:
        hardness = (spec.params.h, 2.0 * spec.params.h)
    types = list(census.types)
    pairs = neb_pairs(types, cutoff)
    jobs = [(j, k, x, y, float(h)) for j, (k, x, y) in enumerate(pairs) for h in hardness]
    if workers == 1:
        results = [_neb_work(spec, x, y, h) for _, _, x, y, h in jobs]
    else:
        results = Parallel(n_jobs=workers)(delayed(_neb_work)(spec, x, y, h) for _, _, x, y, h in jobs)
    cache: dict = {}
    for (j, k, _, _, h), t in zip(jobs, results):
        if t is None or t.index != 1:
            continue
        if any(_same_type(u, t, spec.n, cache) for u in types):
            continue
        t.hits = 0
        t.first_sample = spec.samples + j
        t.origin = {"pair": j, "hardness": h}
        types.append(t)
    types.sort(key=lambda t: (-round(t.radius, 9), t.index, t.first_sample))
    return Census(spec, types, dict(census.failures))


def expand_orbit(t: CriticalType, tol: float | None = None) -> list[Configuration]:
    """All distinct labeled configurations of a type; ``len == t.orbit``."""
    tol = t.key.tol if tol is None else tol
    out = expand_configurations(t.config, tol)
    if len(out) != t.orbit:
        raise AmbiguousOrbitError(f"expected {t.orbit} configurations, found {len(out)}")
    return out


def filter_nondegenerate(types) -> list[CriticalType]:
    return [t for t in types if not t.degenerate]


CSV_FIELDS = ("type_id", "radius", "index", "orbit", "degenerate", "submanifold_dim", "hits")


def summary_csv(types, spec: CampaignSpec | None = None) -> str:
    buf = io.StringIO()
    if spec is not None:
        buf.write("# " + json.dumps(spec.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for k, t in enumerate(types):
        w.writerow([k, f"{t.radius:.10f}", t.index, t.orbit, int(t.degenerate), t.submanifold_dim, t.hits])
    return buf.getvalue()


def radius_histogram(types, bins=None) -> tuple[np.ndarray, np.ndarray]:
    """Counts of non-degenerate types per radius bin, one row per index."""
    types = filter_nondegenerate(types)
    bins = np.arange(0.100, 0.2201, 0.005) if bins is None else np.asarray(bins)
    top = max([t.index for t in types], default=0)
    counts = np.zeros((top + 1, len(bins) - 1), dtype=int)
    for t in types:
        k = np.searchsorted(bins, t.radius, side="right") - 1
        if 0 <= k < counts.shape[1]:
            counts[t.index, k] += 1
    return counts, bins


def radius_summary(types) -> dict:
    radii = np.array([t.radius for t in filter_nondegenerate(types)])
    if radii.size == 0:
        return {"count": 0}
    return {
        "count": int(radii.size),
        "min": float(radii.min()),
        "max": float(radii.max()),
        "fraction_0160_0175": float(((radii >= 0.160) & (radii <= 0.175)).mean()),
    }

