"""Problem instances: matroid descriptions, generation and serialization.

A matroid description is plain data plus definitional independence checks; the
dynamic structures elsewhere in the package are built *from* these
descriptions and never share code with them, so differential tests compare
two genuinely independent routes.

Serialized instances are versioned JSON.  ``matsub gen`` writes them,
``matsub run`` reads them; byte-for-byte determinism per (seed, config) holds
because generation is driven by a named numpy Generator stream and dumping
uses sorted keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .objectives import AdditiveOracle, CoverageOracle, FacilityLocationOracle, ValueOracle

FORMAT_VERSION = 1

# sub-stream ids hung off the master seed; recorded in result files
STREAM_GEN = 0
STREAM_PHASE1 = 1
STREAM_MULTILINEAR = 2
STREAM_ROUNDING = 3


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one named stream of a master seed."""
    return np.random.default_rng([int(seed), int(stream)])


# ---------------------------------------------------------------------------
# laminar


@dataclass
class LaminarMatroid:
    """Laminar family over the ground set, given as a capacitated tree.

    ``parents[v]`` is the parent node of tree node ``v`` (-1 for the root),
    ``capacities[v]`` its budget, and ``element_nodes[e]`` the leaf node that
    element ``e`` occupies.  Leaves hosting elements must not have children.
    """

    parents: list[int]
    capacities: list[int]
    element_nodes: list[int]
    kind: str = field(default="laminar", init=False)

    def __post_init__(self) -> None:
        m = len(self.parents)
        if len(self.capacities) != m:
            raise ValueError("one capacity per tree node required")
        roots = [v for v, p in enumerate(self.parents) if p == -1]
        if len(roots) != 1:
            raise ValueError("exactly one root expected")
        self.root = roots[0]
        self._children: list[list[int]] = [[] for _ in range(m)]
        for v, p in enumerate(self.parents):
            if p != -1:
                if not 0 <= p < m:
                    raise ValueError("parent id out of range")
                self._children[p].append(v)
        # cycle check: every node must reach the root
        for v in range(m):
            seen = 0
            x = v
            while x != -1:
                x = self.parents[x]
                seen += 1
                if seen > m:
                    raise ValueError("parent pointers contain a cycle")
        if len(set(self.element_nodes)) != len(self.element_nodes):
            raise ValueError("elements must occupy distinct leaves")
        for node in self.element_nodes:
            if not 0 <= node < m:
                raise ValueError("element node out of range")
            if self._children[node]:
                raise ValueError("element nodes must be leaves")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.element_nodes)

    def children(self, v: int) -> list[int]:
        return self._children[v]

    def path_to_root(self, node: int) -> list[int]:
        out = []
        while node != -1:
            out.append(node)
            node = self.parents[node]
        return out

    def rank(self) -> int:
        order = self._topo_order()
        has_elem = set(self.element_nodes)
        avail = [0] * len(self.parents)
        for v in reversed(order):
            if not self._children[v]:
                avail[v] = min(1, self.capacities[v]) if v in has_elem else 0
            else:
                avail[v] = min(self.capacities[v], sum(avail[c] for c in self._children[v]))
        return avail[self.root]

    def _topo_order(self) -> list[int]:
        order = [self.root]
        i = 0
        while i < len(order):
            order.extend(self._children[order[i]])
            i += 1
        return order

    def is_independent(self, subset: Iterable[int]) -> bool:
        counts: dict[int, int] = {}
        for e in set(subset):
            for v in self.path_to_root(self.element_nodes[e]):
                counts[v] = counts.get(v, 0) + 1
                if counts[v] > self.capacities[v]:
                    return False
        return True

    def checker(self, base: Iterable[int] = ()) -> "LaminarChecker":
        return LaminarChecker(self, base)

    def payload(self) -> dict:
        return {
            "parents": list(self.parents),
            "capacities": list(self.capacities),
            "element_nodes": list(self.element_nodes),
        }


class LaminarChecker:
    """Incremental independence tester over ancestor counts."""

    def __init__(self, matroid: LaminarMatroid, base: Iterable[int] = ()) -> None:
        self.matroid = matroid
        self.counts = [0] * len(matroid.parents)
        for e in base:
            self.insert(e)

    def test(self, elem: int) -> bool:
        for v in self.matroid.path_to_root(self.matroid.element_nodes[elem]):
            if self.counts[v] + 1 > self.matroid.capacities[v]:
                return False
        return True

    def insert(self, elem: int) -> None:
        for v in self.matroid.path_to_root(self.matroid.element_nodes[elem]):
            self.counts[v] += 1


# ---------------------------------------------------------------------------
# graphic


@dataclass
class GraphicMatroid:
    """Edges of a multigraph; independent sets are the acyclic ones."""

    num_vertices: int
    edges: list[tuple[int, int]]
    kind: str = field(default="graphic", init=False)

    def __post_init__(self) -> None:
        self.edges = [(int(u), int(v)) for u, v in self.edges]
        for u, v in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("edge endpoint out of range")

    @property
    def n(self) -> int:
        return len(self.edges)

    def rank(self) -> int:
        uf = _UnionFind(self.num_vertices)
        r = 0
        for u, v in self.edges:
            if uf.union(u, v):
                r += 1
        return r

    def is_independent(self, subset: Iterable[int]) -> bool:
        uf = _UnionFind(self.num_vertices)
        for e in set(subset):
            u, v = self.edges[e]
            if not uf.union(u, v):
                return False
        return True

    def checker(self, base: Iterable[int] = ()) -> "GraphicChecker":
        return GraphicChecker(self, base)

    def payload(self) -> dict:
        return {"num_vertices": self.num_vertices, "edges": [list(e) for e in self.edges]}


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


class GraphicChecker:
    def __init__(self, matroid: GraphicMatroid, base: Iterable[int] = ()) -> None:
        self.matroid = matroid
        self.uf = _UnionFind(matroid.num_vertices)
        for e in base:
            self.insert(e)

    def test(self, elem: int) -> bool:
        u, v = self.matroid.edges[elem]
        return self.uf.find(u) != self.uf.find(v)

    def insert(self, elem: int) -> None:
        u, v = self.matroid.edges[elem]
        if not self.uf.union(u, v):
            raise ValueError(f"edge {elem} would close a cycle")


# ---------------------------------------------------------------------------
# transversal


@dataclass
class TransversalMatroid:
    """Left vertices of a bipartite graph; independent = matchable."""

    num_right: int
    adjacency: list[list[int]]
    kind: str = field(default="transversal", init=False)

    def __post_init__(self) -> None:
        self.adjacency = [sorted(set(int(r) for r in nbrs)) for nbrs in self.adjacency]
        for nbrs in self.adjacency:
            for r in nbrs:
                if not 0 <= r < self.num_right:
                    raise ValueError("right vertex out of range")

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def rank(self) -> int:
        checker = self.checker()
        r = 0
        for e in range(self.n):
            if checker.test(e):
                checker.insert(e)
                r += 1
        return r

    def is_independent(self, subset: Iterable[int]) -> bool:
        checker = self.checker()
        for e in set(subset):
            if not checker.test(e):
                return False
            checker.insert(e)
        return True

    def checker(self, base: Iterable[int] = ()) -> "TransversalChecker":
        return TransversalChecker(self, base)

    def payload(self) -> dict:
        return {"num_right": self.num_right, "adjacency": [list(a) for a in self.adjacency]}


class TransversalChecker:
    """Incremental matchability via augmenting-path search."""

    def __init__(self, matroid: TransversalMatroid, base: Iterable[int] = ()) -> None:
        self.matroid = matroid
        self.match_right: dict[int, int] = {}
        for e in base:
            if not self.test(e):
                raise ValueError("base set is not independent")
            self.insert(e)

    def _augment(self, elem: int, visited: set[int], commit: bool) -> bool:
        for r in self.matroid.adjacency[elem]:
            if r in visited:
                continue
            visited.add(r)
            owner = self.match_right.get(r)
            if owner is None or self._augment(owner, visited, commit):
                if commit:
                    self.match_right[r] = elem
                return True
        return False

    def test(self, elem: int) -> bool:
        return self._augment(elem, set(), commit=False)

    def insert(self, elem: int) -> None:
        if not self._augment(elem, set(), commit=True):
            raise ValueError("insert would break independence")


Matroid = LaminarMatroid | GraphicMatroid | TransversalMatroid


# ---------------------------------------------------------------------------
# instance bundle


@dataclass
class Instance:
    matroid: Matroid
    objective: dict

    @property
    def n(self) -> int:
        return self.matroid.n

    def build_objective(self) -> ValueOracle:
        cfg = self.objective
        kind = cfg.get("kind")
        if kind == "coverage":
            return CoverageOracle(cfg["covers"], cfg["universe_weights"])
        if kind == "facility":
            return FacilityLocationOracle(np.asarray(cfg["similarity"], dtype=np.float64))
        if kind == "additive":
            return AdditiveOracle(cfg["weights"])
        raise ValueError(f"unknown objective kind: {kind!r}")

    def to_json(self) -> str:
        doc = {
            "version": FORMAT_VERSION,
            "matroid": {"kind": self.matroid.kind, **self.matroid.payload()},
            "objective": self.objective,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "Instance":
        doc = json.loads(text)
        version = doc.get("version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported instance format version: {version!r}")
        mdoc = dict(doc["matroid"])
        kind = mdoc.pop("kind")
        if kind == "laminar":
            matroid: Matroid = LaminarMatroid(
                parents=list(mdoc["parents"]),
                capacities=list(mdoc["capacities"]),
                element_nodes=list(mdoc["element_nodes"]),
            )
        elif kind == "graphic":
            matroid = GraphicMatroid(
                num_vertices=int(mdoc["num_vertices"]),
                edges=[tuple(e) for e in mdoc["edges"]],
            )
        elif kind == "transversal":
            matroid = TransversalMatroid(
                num_right=int(mdoc["num_right"]),
                adjacency=[list(a) for a in mdoc["adjacency"]],
            )
        else:
            raise ValueError(f"unknown matroid kind: {kind!r}")
        return Instance(matroid=matroid, objective=doc["objective"])


# ---------------------------------------------------------------------------
# generation


def _gen_laminar_matroid(
    n: int, rng: np.random.Generator, max_depth: int | None = None
) -> LaminarMatroid:
    depth_cap = 4 if max_depth is None else max(1, max_depth)
    parents = [-1]
    capacities = [0]
    element_nodes = [0] * n

    def build(elems: list[int], parent: int, depth: int) -> None:
        node = len(parents)
        parents.append(parent)
        cap = int(rng.integers(1, len(elems) + 1))
        capacities.append(cap)
        if len(elems) == 1 or depth >= depth_cap or rng.random() < 0.3:
            if len(elems) == 1:
                capacities[node] = 1
                element_nodes[elems[0]] = node
                return
            # attach the block's elements as direct leaf children
            for e in elems:
                leaf = len(parents)
                parents.append(node)
                capacities.append(1)
                element_nodes[e] = leaf
            return
        pieces = int(rng.integers(2, min(4, len(elems)) + 1))
        cuts = sorted(rng.choice(len(elems) - 1, size=pieces - 1, replace=False) + 1) \
            if pieces > 1 else []
        start = 0
        for cut in list(cuts) + [len(elems)]:
            if cut > start:
                build(elems[start:cut], node, depth + 1)
            start = cut

    elems = list(range(n))
    root_cap = int(rng.integers(max(1, n // 3), n + 1))
    capacities[0] = root_cap
    pieces = int(rng.integers(1, min(4, n) + 1))
    if pieces == 1:
        build(elems, 0, 1)
    else:
        cuts = sorted(rng.choice(n - 1, size=pieces - 1, replace=False) + 1)
        start = 0
        for cut in list(cuts) + [n]:
            if cut > start:
                build(elems[start:cut], 0, 1)
            start = cut
    return LaminarMatroid(parents=parents, capacities=capacities, element_nodes=element_nodes)


def _gen_graphic_matroid(
    n: int, rng: np.random.Generator, density: float | None = None
) -> GraphicMatroid:
    # density = target edges-per-vertex ratio; the default matches the
    # historical 0.7 vertex fraction so seeds stay reproducible
    if density is None:
        num_vertices = max(2, int(np.ceil(0.7 * n)) + 1)
    else:
        if density <= 0:
            raise ValueError("density must be positive")
        num_vertices = max(2, int(np.ceil(n / density)) + 1)
    edges = []
    # a scattered spanning-ish backbone first so the rank is not trivial
    for e in range(n):
        if e < num_vertices - 1 and rng.random() < 0.6:
            edges.append((e, int(rng.integers(e + 1, num_vertices))))
        else:
            u = int(rng.integers(0, num_vertices))
            v = int(rng.integers(0, num_vertices - 1))
            if v >= u:
                v += 1
            edges.append((u, v))
    return GraphicMatroid(num_vertices=num_vertices, edges=edges)


def _gen_transversal_matroid(
    n: int, rng: np.random.Generator, degree: int | None = None
) -> TransversalMatroid:
    num_right = max(2, int(np.ceil(0.8 * n)))
    if degree is not None and degree < 1:
        raise ValueError("degree must be positive")
    degree = min(num_right, 4 if degree is None else degree)
    adjacency = []
    for _ in range(n):
        d = int(rng.integers(1, degree + 1))
        adjacency.append(sorted(rng.choice(num_right, size=d, replace=False).tolist()))
    return TransversalMatroid(num_right=num_right, adjacency=adjacency)


def _gen_coverage_objective(n: int, rng: np.random.Generator) -> dict:
    nu = max(4, 3 * n)
    covers = []
    for _ in range(n):
        d = int(rng.integers(1, max(2, nu // 3)))
        covers.append(sorted(rng.choice(nu, size=min(d, nu), replace=False).tolist()))
    weights = np.round(rng.uniform(0.25, 1.75, size=nu), 6)
    return {"kind": "coverage", "covers": covers, "universe_weights": weights.tolist()}


def _gen_facility_objective(n: int, rng: np.random.Generator) -> dict:
    clients = max(4, 2 * n)
    sim = np.round(rng.uniform(0.0, 1.0, size=(n, clients)), 6)
    return {"kind": "facility", "similarity": sim.tolist()}


def _gen_additive_objective(n: int, rng: np.random.Generator) -> dict:
    return {"kind": "additive", "weights": np.round(rng.uniform(0.1, 2.0, size=n), 6).tolist()}


def generate_instance(
    matroid_kind: str,
    objective_kind: str,
    n: int,
    seed: int,
    *,
    tree_depth: int | None = None,
    density: float | None = None,
    degree: int | None = None,
) -> Instance:
    """Deterministically generate an instance from a master seed.

    The keyword knobs reshape one matroid family each (laminar tree depth,
    graphic edge density, transversal left degree); leaving them unset
    reproduces the historical layout byte for byte.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = stream_rng(seed, STREAM_GEN)
    if matroid_kind == "laminar":
        matroid: Matroid = _gen_laminar_matroid(n, rng, tree_depth)
    elif matroid_kind == "graphic":
        matroid = _gen_graphic_matroid(n, rng, density)
    elif matroid_kind == "transversal":
        matroid = _gen_transversal_matroid(n, rng, degree)
    else:
        raise ValueError(f"unknown matroid kind: {matroid_kind!r}")
    if objective_kind == "coverage":
        objective = _gen_coverage_objective(n, rng)
    elif objective_kind == "facility":
        objective = _gen_facility_objective(n, rng)
    elif objective_kind == "additive":
        objective = _gen_additive_objective(n, rng)
    else:
        raise ValueError(f"unknown objective kind: {objective_kind!r}")
    return Instance(matroid=matroid, objective=objective)
