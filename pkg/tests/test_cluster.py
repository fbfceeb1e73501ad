import numpy as np
import pytest

from slabperc.cluster import (
    BlockReach,
    ClusterSizeAtLeast,
    Connected,
    LeftRightCrossing,
    OriginToBoundary,
    ReachFromRect,
    build_forest,
    describe_event,
    evaluate_event,
    event_terminals,
)
from slabperc.errors import GeometryError
from slabperc.lattice import CenteredBox, RectBox, SlabSpec, build_box
from slabperc.sampler import BondConfig

from helpers import bfs_origin_to_ring, bfs_reaches, random_mask


def _mask(box, value=False):
    return np.full(box.edge_count, value, dtype=bool)


def test_all_closed_singletons():
    box = build_box(SlabSpec(1), CenteredBox(1))
    forest = build_forest(box, BondConfig(_mask(box)))
    assert forest.cluster_size((0, 0, 0)) == 1
    sizes = [forest.cluster_size(v) for v in range(box.vertex_count)]
    assert all(s == 1 for s in sizes)


def test_all_open_single_cluster():
    box = build_box(SlabSpec(1), CenteredBox(1))
    forest = build_forest(box, BondConfig(_mask(box, True)))
    assert forest.cluster_size((0, 0, 0)) == box.vertex_count


def test_hand_path_cluster():
    box = build_box(SlabSpec(0), CenteredBox(1))
    mask = _mask(box)
    mask[box.edge_index((0, 0, 0), (1, 0, 0))] = True
    mask[box.edge_index((1, 0, 0), (1, 1, 0))] = True
    forest = build_forest(box, BondConfig(mask))
    assert forest.cluster_size((0, 0, 0)) == 3
    assert forest.connected((0, 0, 0), (1, 1, 0))
    assert not forest.connected((0, 0, 0), (-1, 0, 0))
    members = {box.vertex_coord(v) for v in forest.cluster_vertices((0, 0, 0))}
    assert members == {(0, 0, 0), (1, 0, 0), (1, 1, 0)}


def test_cluster_sizes_partition_vertices():
    box = build_box(SlabSpec(1), CenteredBox(2))
    rng = np.random.default_rng(0)
    forest = build_forest(box, BondConfig(random_mask(rng, box, 0.45)))
    roots = np.unique(forest.roots)
    total = sum(forest.cluster_size(int(r)) for r in roots)
    assert total == box.vertex_count


@pytest.mark.parametrize("k,n,configs", [(0, 2, 170), (1, 3, 170), (2, 4, 160)])
def test_origin_to_boundary_matches_bfs(k, n, configs):
    box = build_box(SlabSpec(k), CenteredBox(n))
    rng = np.random.default_rng(k * 100 + n)
    spec = OriginToBoundary(n)
    for _ in range(configs):
        mask = random_mask(rng, box, rng.uniform(0.1, 0.9))
        forest = build_forest(box, BondConfig(mask))
        assert evaluate_event(forest, box, spec) == bfs_origin_to_ring(box, mask, n)


def test_connected_and_crossing_match_bfs():
    box = build_box(SlabSpec(1), RectBox(0, 3, 0, 2))
    rng = np.random.default_rng(9)
    for _ in range(100):
        mask = random_mask(rng, box, rng.uniform(0.2, 0.8))
        forest = build_forest(box, BondConfig(mask))
        spec = Connected((0, 0, 0), (3, 2, 1))
        src, dst = event_terminals(box, spec)
        assert evaluate_event(forest, box, spec) == bfs_reaches(box, mask, src, dst)
        lr = LeftRightCrossing()
        src, dst = event_terminals(box, lr)
        assert evaluate_event(forest, box, lr) == bfs_reaches(box, mask, src, dst)


def test_events_monotone_under_edge_insertion():
    box = build_box(SlabSpec(1), CenteredBox(3))
    rng = np.random.default_rng(4)
    specs = [
        OriginToBoundary(3),
        Connected((0, 0, 0), (2, -1, 1)),
        ClusterSizeAtLeast((0, 0, 0), 5),
        BlockReach(0, 0, 1),
    ]
    for _ in range(40):
        mask = random_mask(rng, box, 0.35)
        forest = build_forest(box, BondConfig(mask))
        before = [evaluate_event(forest, box, s) for s in specs]
        closed = np.nonzero(~mask)[0]
        e = int(rng.choice(closed))
        mask2 = mask.copy()
        mask2[e] = True
        forest2 = build_forest(box, BondConfig(mask2))
        after = [evaluate_event(forest2, box, s) for s in specs]
        for b, a in zip(before, after):
            assert a or not b  # true never becomes false


def test_boundary_nesting_pathwise():
    box = build_box(SlabSpec(1), CenteredBox(4))
    rng = np.random.default_rng(12)
    for _ in range(60):
        mask = random_mask(rng, box, 0.45)
        forest = build_forest(box, BondConfig(mask))
        reached = [evaluate_event(forest, box, OriginToBoundary(n)) for n in (1, 2, 3, 4)]
        # reaching radius n+1 implies reaching radius n
        for inner, outer in zip(reached, reached[1:]):
            assert inner or not outer


def test_block_reach_hand_construction():
    # radial path of length 2 leaving the footprint [1,2]^2 at sup-distance 2
    box = build_box(SlabSpec(1), RectBox(-1, 4, -1, 4))
    mask = _mask(box)
    mask[box.edge_index((2, 1, 0), (3, 1, 0))] = True
    mask[box.edge_index((3, 1, 0), (4, 1, 0))] = True
    forest = build_forest(box, BondConfig(mask))
    assert evaluate_event(forest, box, BlockReach(0, 0, 2))
    # one edge alone stops at sup-distance 1: event must fail
    mask[box.edge_index((3, 1, 0), (4, 1, 0))] = False
    forest = build_forest(box, BondConfig(mask))
    assert not evaluate_event(forest, box, BlockReach(0, 0, 2))


def test_all_open_makes_every_event_true():
    box = build_box(SlabSpec(1), RectBox(-2, 5, -2, 5))
    forest = build_forest(box, BondConfig(_mask(box, True)))
    for spec in (
        LeftRightCrossing(),
        Connected((0, 0, 0), (5, 5, 1)),
        ClusterSizeAtLeast((0, 0, 0), box.vertex_count),
        BlockReach(0, 0, 2),
        ReachFromRect(0, 1, 0, 1, 2),
    ):
        assert evaluate_event(forest, box, spec)


def test_reach_margin_error_names_missing_margin():
    box = build_box(SlabSpec(0), RectBox(0, 5, 0, 5))
    with pytest.raises(GeometryError, match="margin 2"):
        event_terminals(box, BlockReach(0, 0, 2))


def test_origin_event_needs_centered_box():
    box = build_box(SlabSpec(0), RectBox(0, 3, 0, 3))
    with pytest.raises(GeometryError):
        event_terminals(box, OriginToBoundary(2))


def test_describe_event_tokens():
    assert describe_event(OriginToBoundary(4)) == "origin-to-boundary:4"
    assert describe_event(Connected((0, 0, 0), (1, 2, 1))) == "connected:0_0_0:1_2_1"
    assert describe_event(LeftRightCrossing()) == "left-right"
    assert describe_event(BlockReach(-1, 2, 6)) == "block-reach:-1_2:6"
    for spec in (Connected((0, 0, 0), (1, 2, 1)), BlockReach(-1, 2, 6)):
        assert "," not in describe_event(spec)  # tokens stay single CSV fields
