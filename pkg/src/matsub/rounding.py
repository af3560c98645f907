"""Randomized swap rounding of a convex combination of matroid bases.

Two bases are merged by repeatedly resolving one element of their symmetric
difference: for i in B1 \\ B2 an exchange partner j in B2 \\ B1 is found such
that both B1 - i + j and B2 - j + i are again bases, and a biased coin decides
which side moves.  Folding the merge over the whole combination yields a
random basis whose per-element inclusion probability equals the fractional
coordinate.

Exchange partners are located per matroid family:

- laminar: two unweighted copies of the dynamic laminar structure track the
  evolving bases; the partner for i is the maximum addable leaf of the first
  copy below i's lowest tight constraint in the second.
- graphic: adding i's edge to the second forest closes a unique cycle; any
  cycle edge outside the first forest whose swap keeps it acyclic works.
- transversal: certifying matchings for both bases are maintained, and the
  alternating path from i through their union ends at a valid partner.
"""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .instances import (
    GraphicMatroid,
    LaminarMatroid,
    Matroid,
    TransversalChecker,
    TransversalMatroid,
)
from .laminar import TopTreeLaminarBasis

if TYPE_CHECKING:
    from .optimizer import FractionalSolution


class ExchangeError(RuntimeError):
    """No valid exchange partner exists; impossible for genuine bases."""


def _assert_basis(matroid: Matroid, subset: set[int], label: str) -> None:
    if len(subset) != matroid.rank():
        raise ExchangeError(f"{label} has size {len(subset)}, rank is {matroid.rank()}")
    if not matroid.is_independent(subset):
        raise ExchangeError(f"{label} is not independent")


class _LaminarExchanger:
    """Appendix-style two-structure choreography over an unweighted pair.

    Both structures hold every element of B1 | B2 with weight one.  Shadowed
    elements are out of play for the max-addable queries: initially the
    intersection, thereafter every resolved pair, so the candidate pool is
    always exactly the unresolved part of the current B2 \\ B1.
    """

    def __init__(
        self,
        matroid: LaminarMatroid,
        b1: Iterable[int],
        b2: Iterable[int],
        structure_cls: type = TopTreeLaminarBasis,
    ) -> None:
        self.set1 = set(b1)
        self.set2 = set(b2)
        self.d1 = structure_cls(matroid)
        self.d2 = structure_cls(matroid)
        for e in sorted(self.set1 | self.set2):
            self.d1.make_present(e, 1.0)
            self.d2.make_present(e, 1.0)
        for e in sorted(self.set1):
            self.d1.add_to_basis(e)
        for e in sorted(self.set2):
            self.d2.add_to_basis(e)
        for e in sorted(self.set1 & self.set2):
            self.d1.set_shadow(e, True)
            self.d2.set_shadow(e, True)

    def exchange(self, i: int) -> int:
        # i's addition to B2 is blocked at its lowest tight constraint; the
        # partner must sit below it so that removing j frees that node
        v = self.d2.lowest_tight(i)
        self.d1.remove_from_basis(i)
        self.d1.set_shadow(i, True)
        j = self.d1.max_addable_under(v) if v is not None else self.d1.max_addable()
        if j is None:
            raise ExchangeError(f"no exchange partner for element {i}")
        return j

    def apply(self, i: int, j: int, move_first: bool) -> None:
        if move_first:
            self.d1.add_to_basis(j)
            self.set1.remove(i)
            self.set1.add(j)
        else:
            self.d1.add_to_basis(i)
            self.d2.remove_from_basis(j)
            self.d2.add_to_basis(i)
            self.set2.remove(j)
            self.set2.add(i)
        # both i and j are settled for good: one now lies in both bases, the
        # other in neither, so neither may be offered as a partner again
        self.d1.set_shadow(j, True)
        self.d2.set_shadow(i, True)
        self.d2.set_shadow(j, True)


class _GraphicExchanger:
    """Cycle-walk exchange over two spanning forests."""

    def __init__(self, matroid: GraphicMatroid, b1: Iterable[int], b2: Iterable[int]) -> None:
        self.matroid = matroid
        self.set1 = set(b1)
        self.set2 = set(b2)

    def exchange(self, i: int) -> int:
        u, v = self.matroid.edges[i]
        adjacency: dict[int, list[tuple[int, int]]] = {}
        for e in self.set2:
            a, b = self.matroid.edges[e]
            adjacency.setdefault(a, []).append((b, e))
            adjacency.setdefault(b, []).append((a, e))
        # the u-v path in the forest plus edge i is the unique cycle of B2 + i
        parent: dict[int, tuple[int, int]] = {u: (-1, -1)}
        queue = deque([u])
        while queue and v not in parent:
            x = queue.popleft()
            for y, e in sorted(adjacency.get(x, ())):
                if y not in parent:
                    parent[y] = (x, e)
                    queue.append(y)
        if v not in parent:
            raise ExchangeError(f"endpoints of edge {i} not connected in the second basis")
        cycle: list[int] = []
        x = v
        while x != u:
            x, e = parent[x]
            cycle.append(e)
        for j in sorted(e for e in cycle if e not in self.set1):
            if self.matroid.is_independent((self.set1 - {i}) | {j}):
                return j
        raise ExchangeError(f"no exchange partner for edge {i}")

    def apply(self, i: int, j: int, move_first: bool) -> None:
        if move_first:
            self.set1.remove(i)
            self.set1.add(j)
        else:
            self.set2.remove(j)
            self.set2.add(i)


class _TransversalExchanger:
    """Alternating-path exchange over two certifying matchings.

    The union of the matchings decomposes into paths and even cycles.  An
    element of B1 \\ B2 has degree one, so the walk from it alternating
    first-matching and second-matching edges ends at an element of B2 \\ B1;
    flipping the traversed path updates whichever certificate moved.
    """

    def __init__(self, matroid: TransversalMatroid, b1: Iterable[int], b2: Iterable[int]) -> None:
        self.set1 = set(b1)
        self.set2 = set(b2)
        right1 = TransversalChecker(matroid, sorted(self.set1)).match_right
        right2 = TransversalChecker(matroid, sorted(self.set2)).match_right
        self.m1 = {e: r for r, e in right1.items()}
        self.m2 = {e: r for r, e in right2.items()}
        self.r1 = dict(right1)
        self.r2 = dict(right2)
        self._path: list[tuple[int, int]] = []

    def exchange(self, i: int) -> int:
        edges: list[tuple[int, int]] = []
        e = i
        for _ in range(2 * len(self.set2) + 2):
            r = self.m1[e]
            edges.append((e, r))
            nxt = self.r2.get(r)
            if nxt is None:
                raise ExchangeError(f"walk from {i} left the certificates at right vertex {r}")
            edges.append((nxt, r))
            if nxt not in self.m1:
                self._path = edges
                return nxt
            e = nxt
        raise ExchangeError(f"alternating walk from {i} did not terminate")

    def apply(self, i: int, j: int, move_first: bool) -> None:
        first_half = self._path[0::2]
        second_half = self._path[1::2]
        if move_first:
            for e, r in first_half:
                del self.m1[e]
                del self.r1[r]
            for e, r in second_half:
                self.m1[e] = r
                self.r1[r] = e
            self.set1.remove(i)
            self.set1.add(j)
        else:
            for e, r in second_half:
                del self.m2[e]
                del self.r2[r]
            for e, r in first_half:
                self.m2[e] = r
                self.r2[r] = e
            self.set2.remove(j)
            self.set2.add(i)
        self._path = []


def _make_exchanger(matroid: Matroid, b1: Iterable[int], b2: Iterable[int]):
    if matroid.kind == "laminar":
        return _LaminarExchanger(matroid, b1, b2)
    if matroid.kind == "graphic":
        return _GraphicExchanger(matroid, b1, b2)
    if matroid.kind == "transversal":
        return _TransversalExchanger(matroid, b1, b2)
    raise ValueError(f"unsupported matroid kind {matroid.kind!r}")


def find_exchange(i: int, b1: Iterable[int], b2: Iterable[int], matroid: Matroid) -> int:
    """Partner j in B2 \\ B1 with B1 - i + j and B2 - j + i both bases."""
    set1, set2 = set(b1), set(b2)
    if i not in set1 or i in set2:
        raise ValueError(f"element {i} must lie in B1 and not in B2")
    return _make_exchanger(matroid, set1, set2).exchange(i)


def merge_bases(
    alpha1: float,
    b1: Iterable[int],
    alpha2: float,
    b2: Iterable[int],
    matroid: Matroid,
    rng: np.random.Generator,
    verify: bool = True,
) -> list[int]:
    """Randomly merge two bases; each survives in proportion to its weight.

    Every element of the symmetric difference is resolved by one biased coin:
    with probability alpha2 / (alpha1 + alpha2) the first basis adopts the
    partner, otherwise the second adopts the element.  On return the two
    (internally tracked) bases coincide and the common basis is returned, so
    Pr[e in result] = (alpha1 * [e in B1] + alpha2 * [e in B2]) / (alpha1 + alpha2).
    """
    if alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("mixture weights must be positive")
    exchanger = _make_exchanger(matroid, b1, b2)
    if len(exchanger.set1) != len(exchanger.set2):
        raise ValueError("bases must have equal size")
    if verify:
        _assert_basis(matroid, exchanger.set1, "first basis")
        _assert_basis(matroid, exchanger.set2, "second basis")
    threshold = alpha2 / (alpha1 + alpha2)
    for i in sorted(exchanger.set1 - exchanger.set2):
        j = exchanger.exchange(i)
        if verify:
            _assert_basis(matroid, (exchanger.set1 - {i}) | {j}, "first exchange")
            _assert_basis(matroid, (exchanger.set2 - {j}) | {i}, "second exchange")
        exchanger.apply(i, j, move_first=rng.random() < threshold)
    if exchanger.set1 != exchanger.set2:
        raise ExchangeError("merge finished with distinct bases")
    return sorted(exchanger.set1)


def swap_round(
    fractional: "FractionalSolution",
    matroid: Matroid,
    rng: np.random.Generator,
    verify: bool = True,
) -> list[int]:
    """Left-fold of the pairwise merge over a convex combination of bases.

    The running merge carries the accumulated mixture weight, so every basis
    enters with influence proportional to its coefficient and the output
    preserves the fractional marginals elementwise.
    """
    bases: Sequence[tuple[float, Sequence[int]]] = list(fractional.bases)
    if not bases:
        raise ValueError("fractional solution holds no bases")
    weight, merged = bases[0][0], list(bases[0][1])
    for alpha, basis in bases[1:]:
        merged = merge_bases(weight, merged, alpha, basis, matroid, rng, verify=verify)
        weight += alpha
    return sorted(merged)
