from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from diskmorse.census import ALL_INDICES, CampaignSpec, filter_nondegenerate, run_campaign
from diskmorse.morse import (
    REFERENCE_HIGHER_BETTI,
    Dendrogram,
    InconsistencyError,
    MorseEvent,
    UnionFind,
    betti_table,
    build_dendrogram,
    render_report,
)

from .conftest import R2


@st.composite
def graphs(draw):
    nv = draw(st.integers(1, 40))
    edges = draw(st.lists(st.tuples(st.integers(0, nv - 1), st.integers(0, nv - 1)), max_size=60))
    return nv, edges


@given(graphs())
def test_union_find_matches_graph_components(g):
    nv, edges = g
    uf = UnionFind()
    for _ in range(nv):
        uf.add()
    for u, v in edges:
        uf.union(u, v)
    u = [e[0] for e in edges]
    v = [e[1] for e in edges]
    A = coo_matrix((np.ones(len(edges)), (u, v)), shape=(nv, nv))
    assert uf.count == connected_components(A, directed=False)[0]


@given(graphs())
def test_union_find_partition_is_consistent(g):
    nv, edges = g
    uf = UnionFind()
    for _ in range(nv):
        uf.add()
    for u, v in edges:
        uf.union(u, v)
    for u, v in edges:
        assert uf.find(u) == uf.find(v)
    assert len({uf.find(k) for k in range(nv)}) == uf.count


def _fake_events(spec):
    """Types and a dendrogram built from ``(radius, index, orbit, beta0)`` rows."""
    types, d = [], Dendrogram(4)
    for k, (r, idx, orbit, b0) in enumerate(spec):
        t = SimpleNamespace(radius=r, index=idx, orbit=orbit, degenerate=False, first_sample=k, submanifold_dim=0)
        types.append(t)
        if idx <= 1:
            d.events.append(MorseEvent(r, [t], idx, {}, b0))
    return types, d


# cells of the four-disk decomposition, each count an orbit size
N4 = [
    (0.2500, 0, 24, 24),
    (0.2071, 1, 24, 6),
    (0.1923, 1, 96, 1),
    (0.1871, 1, 96, 1),
    (0.1847, 2, 96, None),
    (0.1667, 2, 96, None),
    (0.1602, 2, 48, None),
    (0.1400, 3, 48, None),
]


def test_four_disk_betti_rows_from_cell_counts():
    types, d = _fake_events(N4)
    bt = betti_table(types, d, REFERENCE_HIGHER_BETTI[4])
    assert bt.column(0) == [24, 6, 1, 1, 1, 1, 1, 1]
    assert bt.column(1) == [0, 6, 97, 193, 97, 6, 6, 6]
    assert bt.euler_consistent()


def test_betti_rows_become_bounds_after_index_two():
    types, d = _fake_events(N4)
    bt = betti_table(types, d)
    assert bt.validity_bound == pytest.approx(0.1847)
    assert [r.beta1_is_bound for r in bt.rows] == [False] * 4 + [True] * 4
    assert bt.column(1)[:4] == [0, 6, 97, 193]
    assert all(b == 193 for b in bt.column(1)[4:])


def test_negative_beta1_is_an_inconsistency():
    # a component count too small for the cells attached so far
    types, d = _fake_events([(0.3, 0, 2, 2), (0.2, 1, 1, 0)])
    with pytest.raises(InconsistencyError):
        betti_table(types, d)


def test_higher_betti_columns_must_match_events():
    types, d = _fake_events(N4[:3])
    with pytest.raises(ValueError):
        betti_table(types, d, REFERENCE_HIGHER_BETTI[4])


@pytest.fixture(scope="module")
def two_disk_census():
    return run_campaign(CampaignSpec(2, 150, 0, ALL_INDICES))


def test_two_disks_form_a_circle(two_disk_census):
    types = filter_nondegenerate(two_disk_census.types)
    assert types[0].radius == pytest.approx(R2, abs=1e-9)
    d = build_dendrogram(types)
    assert d.components == d.oracle_components == [4, 1]
    assert d.component_structure(0.2499) == [(4, 4)]
    bt = betti_table(types, d)
    assert bt.column(0) == [4, 1]
    assert bt.column(1) == [0, 1]


def test_empty_census_gives_empty_outputs(tmp_path):
    d = build_dendrogram([])
    bt = betti_table([], d)
    assert d.events == [] and bt.rows == []
    files = render_report(d, bt, tmp_path, [], {"command": "render"})
    assert all(f.exists() for f in files)
    csv = (tmp_path / "betti.csv").read_text().splitlines()
    assert csv[0].startswith("#") and csv[1].startswith("radius,index")
    assert len(csv) == 2


def test_render_writes_figures(two_disk_census, tmp_path):
    types = filter_nondegenerate(two_disk_census.types)
    d = build_dendrogram(types)
    files = render_report(d, betti_table(types, d), tmp_path, types)
    names = {f.name for f in files}
    assert {"dendrogram.svg", "betti.csv"} <= names
    assert sum(name.endswith(".svg") for name in names) == 1 + len(types)
    for f in files:
        if f.suffix == ".svg":
            assert f.read_text().lstrip().startswith("<svg")


def test_dendrogram_rejects_degenerate_types(two_disk_census):
    t = two_disk_census.types[0]
    bad = SimpleNamespace(**{**t.__dict__, "degenerate": True})
    with pytest.raises(ValueError):
        build_dendrogram([bad])
