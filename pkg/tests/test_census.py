import json

import numpy as np
import pytest

from diskmorse.bonds import extract_bonds
from diskmorse.census import (
    ALL_INDICES,
    MIN_PAIR_DISTANCE,
    MIN_WALL_DISTANCE,
    CampaignSpec,
    Census,
    bond_signature,
    classify_groups,
    expand_orbit,
    filter_nondegenerate,
    merge_groups,
    neb_pairs,
    neb_saddles,
    radius_histogram,
    reduce_outcomes,
    run_campaign,
    run_samples,
    start_point,
)
from diskmorse.core import apply_symmetry, square_group
from diskmorse.morse import build_dendrogram

from .conftest import R2


def test_spec_validation():
    with pytest.raises(ValueError):
        CampaignSpec(0, 10)
    with pytest.raises(ValueError):
        CampaignSpec(2, 0)
    with pytest.raises(ValueError):
        CampaignSpec(2, 10, pipeline="everything")
    with pytest.raises(ValueError):
        CampaignSpec(2, 10, eps=-1)
    assert CampaignSpec(2, 10).bond_eps == 0.001
    assert CampaignSpec(2, 10, pipeline=ALL_INDICES).bond_eps == 0.01
    s = CampaignSpec(3, 7, 11, ALL_INDICES, eps=0.02)
    assert CampaignSpec.from_dict(s.to_dict()).to_dict() == s.to_dict()
    with pytest.raises(ValueError):
        CampaignSpec(2, 10, neb_cutoff=-0.1)
    assert CampaignSpec(2, 10).band_cutoff == 0.0
    assert CampaignSpec(2, 10, pipeline=ALL_INDICES).band_cutoff == 0.6
    assert CampaignSpec(2, 10, pipeline=ALL_INDICES, neb_cutoff=0).band_cutoff == 0.0


def test_start_points_are_seeded_and_spread():
    a, b = start_point(5, 123), start_point(5, 123)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, start_point(5, 124))
    for seed in range(200):
        x = start_point(6, seed)
        P = x.reshape(6, 2)
        d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1)) + np.eye(6)
        assert d.min() >= MIN_PAIR_DISTANCE
        assert MIN_WALL_DISTANCE <= x.min() and x.max() <= 1 - MIN_WALL_DISTANCE


def test_single_disk_all_indices():
    census = run_campaign(CampaignSpec(1, 10, 0, ALL_INDICES))
    assert len(census) == 1
    t = census[0]
    assert t.index == 0 and t.orbit == 1 and t.hits == 10
    assert abs(t.radius - 0.5) < 1e-12
    assert np.allclose(t.config.centers, [[0.5, 0.5]])


def test_two_disk_minimum():
    census = run_campaign(CampaignSpec(2, 30, 0))
    assert len(census) == 1
    t = census[0]
    assert abs(t.radius - R2) <= 1e-9
    assert t.orbit == 4 and len(expand_orbit(t)) == 4
    assert not t.degenerate and t.index == 0


def test_campaign_is_deterministic_and_shardable():
    spec = CampaignSpec(3, 40, 5)
    a = run_campaign(spec)
    b = run_campaign(spec, chunk=7)
    assert a.to_csv() == b.to_csv()
    # explicit shard/merge
    g1, f1 = reduce_outcomes(run_samples(spec, range(0, 25)))
    g2, f2 = reduce_outcomes(run_samples(spec, range(25, 40)))
    merged = merge_groups(g1, g2)
    g_all, _ = reduce_outcomes(run_samples(spec, range(40)))
    assert merged.keys() == g_all.keys()
    for k in merged:
        assert merged[k].first_sample == g_all[k].first_sample
        assert merged[k].hits == g_all[k].hits
    types, _ = classify_groups(spec, merged)
    assert [t.to_dict() for t in types] == [t.to_dict() for t in a.types]


def test_worker_count_does_not_change_csv():
    spec = CampaignSpec(3, 24, 9)
    assert run_campaign(spec, workers=1).to_csv() == run_campaign(spec, workers=2, chunk=5).to_csv()


def test_census_json_roundtrip(tmp_path):
    census = run_campaign(CampaignSpec(3, 20, 1))
    path = tmp_path / "c.json"
    path.write_text(census.to_json())
    back = Census.from_dict(json.loads(path.read_text()))
    assert back.to_csv() == census.to_csv()
    assert [t.key for t in back] == [t.key for t in census]
    with pytest.raises(ValueError):
        Census.from_dict({"metadata": {}})
    with pytest.raises(ValueError):
        Census.from_dict({"types": [{"radius": 1}]})


def test_every_type_is_balanced():
    from diskmorse.bonds import check_balance

    census = run_campaign(CampaignSpec(3, 30, 2, ALL_INDICES))
    assert len(census) >= 1
    for t in census:
        assert check_balance(t.representative.source_bonds, t.config).balanced
        assert (8 * 6) % t.orbit == 0
        assert t.hits >= 1 or t.origin is not None


def test_filter_nondegenerate():
    census = run_campaign(CampaignSpec(2, 5, 0))
    assert filter_nondegenerate(census.types) == census.types
    t = census[0]
    t.degenerate = True
    assert filter_nondegenerate([t]) == []


def test_bond_signature_is_invariant(softened_n5):
    c = softened_n5["min_0.1964"]
    b = extract_bonds(c, 0.06)
    g, perm = square_group()[5], (3, 0, 4, 1, 2)
    assert bond_signature(b, 5) == bond_signature(b.transformed(g, perm), 5)
    assert bond_signature(extract_bonds(apply_symmetry(c, g, perm), 0.06), 5) == bond_signature(b, 5)


def test_radius_histogram_counts():
    census = run_campaign(CampaignSpec(2, 5, 0))
    counts, bins = radius_histogram(census.types, bins=[0.2, 0.3, 0.4])
    assert counts.tolist() == [[1, 0]]


@pytest.fixture(scope="module")
def two_disk_sampled():
    return run_campaign(CampaignSpec(2, 150, 0, ALL_INDICES, neb_cutoff=0))


def test_close_minimum_pairs(two_disk_sampled):
    mins = [t for t in two_disk_sampled.types if t.index == 0]
    pairs = neb_pairs(two_disk_sampled.types, 0.6)
    # the two neighbors of the representative, one quarter turn apart
    assert len(pairs) == 2
    for _, x, y in pairs:
        assert 0 < np.linalg.norm(y - x) <= 0.6
        assert np.array_equal(x, mins[0].softened.flat)
    assert neb_pairs(two_disk_sampled.types, 0.1) == []


def test_bands_recover_a_missing_saddle(two_disk_sampled):
    saddles = [t for t in two_disk_sampled.types if t.index == 1]
    assert len(saddles) == 1
    mins = Census(two_disk_sampled.spec, [t for t in two_disk_sampled.types if t.index == 0])
    out = neb_saddles(mins, cutoff=0.6, hardness=(100.0,))
    new = [t for t in out.types if t.origin is not None]
    assert len(new) == 1
    t = new[0]
    assert t.radius == pytest.approx(saddles[0].radius, abs=1e-9)
    assert (t.index, t.orbit, t.hits, t.hardness) == (1, saddles[0].orbit, 0, 100.0)
    assert t.origin["hardness"] == 100.0
    back = Census.from_dict(json.loads(out.to_json()))
    assert [u.to_dict() for u in back] == [u.to_dict() for u in out]
    # descents start at h=100 and end on the h=50 minima
    d = build_dendrogram(filter_nondegenerate(out.types), p=out.spec.params)
    assert d.components == [4, 1]


def test_bands_do_not_duplicate_sampled_saddles(two_disk_sampled):
    out = neb_saddles(two_disk_sampled, cutoff=0.6)
    assert out.to_csv() == two_disk_sampled.to_csv()
