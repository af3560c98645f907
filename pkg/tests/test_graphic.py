"""Tests for the contracted-graph forest structure and its edge oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from matsub.core import weight_key
from matsub.graphic import ContractedGraph
from matsub.instances import GraphicChecker, GraphicMatroid, _UnionFind


def _expected_forest(
    mat: GraphicMatroid, weights: dict[int, float], frozen: set[int]
) -> tuple[set[int], dict[int, int]]:
    """Per-supervertex max incident edge, recomputed from scratch."""
    dsu = _UnionFind(mat.num_vertices)
    for e in frozen:
        u, v = mat.edges[e]
        dsu.union(u, v)
    best: dict[int, int] = {}
    for e, w in weights.items():
        if e in frozen:
            continue
        u, v = mat.edges[e]
        ru, rv = dsu.find(u), dsu.find(v)
        if ru == rv:
            continue
        for r in (ru, rv):
            if r not in best or weight_key(w, e) > weight_key(weights[best[r]], best[r]):
                best[r] = e
    return set(best.values()) | frozen, best


def _kruskal_weight(
    mat: GraphicMatroid, weights: dict[int, float], frozen: set[int]
) -> float:
    """Max-weight forest containing the frozen edges."""
    dsu = _UnionFind(mat.num_vertices)
    total = 0.0
    for e in frozen:
        u, v = mat.edges[e]
        dsu.union(u, v)
        total += weights[e]
    order = sorted(weights, key=lambda e: weight_key(weights[e], e), reverse=True)
    for e in order:
        if e in frozen:
            continue
        u, v = mat.edges[e]
        if dsu.union(u, v):
            total += weights[e]
    return total


def _is_forest(mat: GraphicMatroid, edges: list[int]) -> bool:
    dsu = _UnionFind(mat.num_vertices)
    return all(dsu.union(*mat.edges[e]) for e in edges)


def test_single_edge() -> None:
    mat = GraphicMatroid(num_vertices=2, edges=[(0, 1)])
    d = ContractedGraph(mat, {0: 4.0})
    assert d.forest() == [0]
    assert d.approx_base_weight() == pytest.approx(4.0)


def test_four_cycle_half_bounds() -> None:
    mat = GraphicMatroid(num_vertices=4, edges=[(0, 1), (1, 2), (2, 3), (3, 0)])
    weights = {0: 10.0, 1: 1.0, 2: 10.0, 3: 1.0}
    d = ContractedGraph(mat, weights)
    assert d.forest() == [0, 2]
    assert d.approx_base_weight() == pytest.approx(20.0)
    assert _kruskal_weight(mat, weights, set()) == pytest.approx(21.0)
    assert mat.rank() == 3
    assert 20.0 >= 0.5 * 21.0 and len(d.forest()) >= 0.5 * mat.rank()


def test_path_is_exact() -> None:
    mat = GraphicMatroid(num_vertices=3, edges=[(0, 1), (1, 2)])
    d = ContractedGraph(mat, {0: 5.0, 1: 3.0})
    assert d.forest() == [0, 1]
    assert d.approx_base_weight() == pytest.approx(8.0)


def test_decrement_nonforest_edge_no_changes() -> None:
    mat = GraphicMatroid(num_vertices=3, edges=[(0, 1), (1, 2), (0, 2)])
    d = ContractedGraph(mat, {0: 3.0, 1: 2.0, 2: 1.0})
    assert d.forest() == [0, 1]
    c = d.decrement(2, 0.0)
    assert c.added == [] and c.removed == []
    assert d.forest() == [0, 1]


def test_decrement_swaps_cycle_edge() -> None:
    mat = GraphicMatroid(num_vertices=4, edges=[(0, 1), (1, 2), (2, 3), (3, 0)])
    weights = {0: 10.0, 1: 1.0, 2: 10.0, 3: 1.0}
    d = ContractedGraph(mat, dict(weights))
    c = d.decrement(0, 0.5)
    weights[0] = 0.5
    assert c.removed == [0]
    assert sorted(c.added) == [(1, 1.0), (3, 1.0)]
    expected, _ = _expected_forest(mat, weights, set())
    assert set(d.forest()) == expected == {1, 2, 3}


def test_decrement_star_center_reselects() -> None:
    mat = GraphicMatroid(num_vertices=4, edges=[(0, 1), (0, 2), (0, 3)])
    d = ContractedGraph(mat, {0: 3.0, 1: 2.0, 2: 1.0})
    assert d.forest() == [0, 1, 2]
    c = d.decrement(0, 0.0)
    # the center now prefers the 2-edge, but the leaf still holds edge 0,
    # so the forest is unchanged apart from the weight move
    assert d.sel[d.dsu.find(0)] == 1
    assert c.removed == [0] and c.added == [(0, 0.0)]
    assert d.forest() == [0, 1, 2]
    assert d.approx_base_weight() == pytest.approx(3.0)


def test_freeze_only_edge() -> None:
    mat = GraphicMatroid(num_vertices=2, edges=[(0, 1)])
    d = ContractedGraph(mat, {0: 5.0})
    c = d.freeze(0)
    assert c.removed == [0] and c.added == []
    assert d.forest() == [0] and d.frozen == {0}
    assert d.approx_base_weight() == pytest.approx(5.0)
    assert d.freeze(0).removed == []  # already frozen: no-op
    with pytest.raises(ValueError):
        d.decrement(0, 1.0)


def test_freeze_triangle_reselects_merged_vertex() -> None:
    mat = GraphicMatroid(num_vertices=3, edges=[(0, 1), (1, 2), (0, 2)])
    d = ContractedGraph(mat, {0: 3.0, 1: 2.0, 2: 1.0})
    c = d.freeze(0)
    assert c.removed == [0] and c.added == []
    assert d.forest() == [0, 1]
    assert d.approx_base_weight() == pytest.approx(5.0)


def test_argument_validation() -> None:
    mat = GraphicMatroid(num_vertices=3, edges=[(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        ContractedGraph(mat, {5: 1.0})
    with pytest.raises(ValueError):
        ContractedGraph(mat, {0: -1.0})
    d = ContractedGraph(mat, {0: 2.0, 1: 1.0})
    with pytest.raises(ValueError):
        d.decrement(0, 2.0)  # not strictly smaller
    with pytest.raises(ValueError):
        d.decrement(0, -0.5)
    with pytest.raises(ValueError):
        d.decrement(7, 1.0)
    d.decrement(1, 0.0)
    with pytest.raises(ValueError):
        d.freeze(7)


def _random_graph(rng: np.random.Generator) -> GraphicMatroid:
    n = int(rng.integers(4, 13))
    m = int(rng.integers(n, 3 * n))
    edges = []
    for _ in range(m):
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        while v == u:
            v = int(rng.integers(n))
        edges.append((u, v))
    return GraphicMatroid(num_vertices=n, edges=edges)


def _random_weight(rng: np.random.Generator) -> float:
    return float(rng.integers(0, 12)) / 2.0


def test_differential_random_ops() -> None:
    rng = np.random.default_rng(42)
    for _ in range(12):
        mat = _random_graph(rng)
        m = len(mat.edges)
        weights = {e: _random_weight(rng) for e in range(m)}
        d = ContractedGraph(mat, dict(weights))
        frozen: set[int] = set()
        mirror = {e: weights[e] for e in d.forest()}
        for _ in range(120):
            roll = rng.random()
            candidates = [e for e in range(m) if e not in frozen and weights[e] > 0]
            changes = None
            if roll < 0.75 and candidates:
                e = int(rng.choice(candidates))
                new_w = float(rng.uniform(0, weights[e] * 0.999))
                changes = d.decrement(e, new_w)
                weights[e] = new_w
            elif d.forest():
                pool = [e for e in d.forest() if e not in frozen]
                if not pool:
                    continue
                e = int(rng.choice(pool))
                changes = d.freeze(e)
                frozen.add(e)
            if changes is not None:
                for e in changes.removed:
                    del mirror[e]
                for e, w in changes.added:
                    assert e not in mirror
                    mirror[e] = w
            expected, _ = _expected_forest(mat, weights, frozen)
            forest = d.forest()
            assert set(forest) == expected
            assert mirror == {e: weights[e] for e in forest if e not in frozen}
            assert d.approx_base_weight() == pytest.approx(
                sum(weights[e] for e in forest)
            )
            assert _is_forest(mat, forest)
            assert sum(weights[e] for e in forest) >= 0.5 * _kruskal_weight(
                mat, weights, frozen
            ) - 1e-9
            assert len(forest) >= 0.5 * mat.rank()


def test_heap_ops_amortized_bound() -> None:
    rng = np.random.default_rng(7)
    mat = _random_graph(rng)
    m = len(mat.edges)
    weights = {e: float(rng.uniform(1, 100)) for e in range(m)}
    d = ContractedGraph(mat, dict(weights))
    ops = 0
    for _ in range(400):
        e = int(rng.integers(m))
        if e in d.frozen or weights[e] <= 0:
            continue
        new_w = weights[e] * 0.9
        d.decrement(e, new_w)
        weights[e] = new_w
        ops += 1
    budget = 30 * (m + ops) * math.log2(max(2, mat.num_vertices))
    assert d.heap_ops <= budget


def test_incremental_oracle_basic() -> None:
    mat = GraphicMatroid(num_vertices=3, edges=[(0, 1), (1, 2), (0, 2)])
    chk = GraphicChecker(mat)
    assert chk.test(0)
    chk.insert(0)
    assert chk.test(1)
    chk.insert(1)
    assert not chk.test(2)
    with pytest.raises(ValueError):
        chk.insert(2)


def test_incremental_oracle_matches_forest_check() -> None:
    rng = np.random.default_rng(3)
    for _ in range(20):
        mat = _random_graph(rng)
        m = len(mat.edges)
        chk = GraphicChecker(mat)
        accepted: list[int] = []
        for e in rng.permutation(m):
            e = int(e)
            ok = chk.test(e)
            assert ok == mat.is_independent(accepted + [e])
            if ok:
                chk.insert(e)
                accepted.append(e)
        # the accepted set is a maximal forest
        assert len(accepted) == mat.rank()
