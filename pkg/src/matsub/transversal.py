"""Approximate matching structures over bipartite representations.

Two structures live here.  The first maintains a maximal matching under
weight decrements without ever unmatching a left vertex that was not itself
decremented (L-stability).  It prices left vertices by virtual weights that
shrink by a (1+eps) factor on every re-match, so a displaced right vertex
never wants to steal its old partner back immediately, and the total scan
work stays near-linear.  Weights are rounded down to integer powers of
(1+eps) at ingestion; arithmetic on weights is done on the exponents.

The second maintains a matching with no augmenting path of at most
2 + 2/eps edges, which keeps its size within (1-eps) of maximum.  It grows
by right-vertex insertions with bounded-depth augmenting searches and
supports deleting a left vertex by pinning it to a fresh degree-1 right
vertex, then repairing from the abandoned partner.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

from .core import OracleChanges
from .instances import TransversalMatroid


class LStableMatching:
    """Maximal matching under decrements, stable on the left side.

    Virtual weights are kept as integer exponents of (1+eps) relative to
    the floor ``w_min``; ``None`` stands for weight zero.  A right vertex r
    scans its neighbor list once per exponent level from ``k`` down to
    ``-floor(1/eps)``, remembering its position between searches, so the
    lifetime scanning work is O(|N_r| * (k + 1/eps)) per vertex.
    """

    def __init__(
        self,
        matroid: TransversalMatroid,
        weights: Mapping[int, float],
        epsilon: float,
        w_min: float | None = None,
    ) -> None:
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        self.matroid = matroid
        self.eps = epsilon
        n = matroid.n
        raw = [float(weights.get(l, 0.0)) for l in range(n)]
        if any(w < 0 for w in raw):
            raise ValueError("weights must be nonnegative")
        w_max = max(raw, default=0.0)
        if w_min is None:
            w_min = w_max * epsilon / max(1, n) if w_max > 0 else 1.0
        if w_min <= 0:
            raise ValueError("w_min must be positive")
        self.scale = w_min
        self.low = -math.floor(1 / epsilon)
        if w_max > w_min:
            self.k = self._ceil_log(w_max / w_min)
        else:
            self.k = 0
        self.w_lv: list[int | None] = [self._round_level(w) for w in raw]
        self.w_val: list[float] = [self.level_value(lv) for lv in self.w_lv]
        self.vw: list[int | None] = list(self.w_lv)
        self.n_r: list[list[int]] = [[] for _ in range(matroid.num_right)]
        for l in range(n):
            for r in matroid.adjacency[l]:
                self.n_r[r].append(l)
        self.m = sum(len(nbrs) for nbrs in self.n_r)
        self.p_r = [0] * matroid.num_right
        self.j_r = [self.k] * matroid.num_right
        self.match_of_l: dict[int, int] = {}
        self.match_of_r: dict[int, int] = {}
        self.frozen: set[int] = set()
        self.fallback: set[int] = set()
        self.scan_steps = 0
        self.fallback_steps = 0
        self.per_r_scans = [0] * matroid.num_right
        for r in range(matroid.num_right):
            self._run_match(r)

    # -- weight levels -----------------------------------------------------

    def _ceil_log(self, ratio: float) -> int:
        base = math.log1p(self.eps)
        j = math.ceil(math.log(ratio) / base - 1e-12)
        while (1 + self.eps) ** j < ratio:
            j += 1
        while j > 0 and (1 + self.eps) ** (j - 1) >= ratio:
            j -= 1
        return j

    def _round_level(self, w: float) -> int | None:
        """Largest j with scale*(1+eps)^j <= w, or None below the floor."""
        if w <= 0:
            return None
        base = math.log1p(self.eps)
        j = math.floor(math.log(w / self.scale) / base + 1e-12)
        while self.scale * (1 + self.eps) ** j > w:
            j -= 1
        while self.scale * (1 + self.eps) ** (j + 1) <= w:
            j += 1
        if j < self.low:
            return None
        return min(j, self.k)

    def level_value(self, level: int | None) -> float:
        if level is None:
            return 0.0
        return self.scale * (1 + self.eps) ** level

    # -- matching ----------------------------------------------------------

    def match_r(self, r: int) -> None:
        if r in self.match_of_r:
            raise ValueError(f"right vertex {r} is already matched")
        self._run_match(r)

    def _run_match(self, r: int) -> None:
        # iterative form of the displacement chain: each round either ends
        # by matching a previously unmatched left vertex (the chain stops)
        # or displaces one right vertex, which becomes the next round
        current: int | None = r
        while current is not None:
            current = self._match_round(current)

    def _match_round(self, r: int) -> int | None:
        displaced: int | None = None
        nbrs = self.n_r[r]
        while self.j_r[r] >= self.low and displaced is None:
            while self.p_r[r] < len(nbrs) and displaced is None:
                l = nbrs[self.p_r[r]]
                self.p_r[r] += 1
                self.scan_steps += 1
                self.per_r_scans[r] += 1
                lv = self.vw[l]
                if lv is not None and lv >= self.j_r[r]:
                    self.vw[l] = lv - 1
                    prev = self.match_of_l.get(l)
                    if prev is not None:
                        del self.match_of_r[prev]
                        self.match_of_l[l] = r
                        self.match_of_r[r] = l
                        displaced = prev
                    else:
                        self.match_of_l[l] = r
                        self.match_of_r[r] = l
                        self.fallback.discard(l)
                        return None
            if displaced is None and self.p_r[r] >= len(nbrs):
                self.j_r[r] -= 1
                self.p_r[r] = 0
        if r not in self.match_of_r:
            for l in nbrs:
                self.fallback_steps += 1
                if l not in self.match_of_l:
                    self.match_of_l[l] = r
                    self.match_of_r[r] = l
                    self.fallback.add(l)
                    break
        return displaced

    # -- public mutations --------------------------------------------------

    def decrement(self, l: int, w: float) -> OracleChanges:
        if not 0 <= l < self.matroid.n:
            raise ValueError(f"left vertex {l} out of range")
        if l in self.frozen:
            raise ValueError("cannot decrement a frozen vertex")
        if w < 0:
            raise ValueError("weights must be nonnegative")
        if w >= self.w_val[l]:
            raise ValueError("decrement must lower the weight")
        before = set(self.match_of_l)
        new_lv = self._round_level(w)
        self.w_lv[l] = new_lv
        self.w_val[l] = self.level_value(new_lv)
        cur = self.vw[l]
        # act whenever the new level does not sit strictly above the
        # virtual weight, so a matched vertex never ends with vw = w
        if cur is not None and (new_lv is None or new_lv <= cur):
            self.vw[l] = new_lv
            r = self.match_of_l.get(l)
            if r is not None:
                del self.match_of_l[l]
                del self.match_of_r[r]
                self.fallback.discard(l)
                self._run_match(r)
                if l not in self.match_of_l:
                    # wake the other unmatched neighbors; their scans are
                    # exhausted, so each call is one cheap fallback pass,
                    # and it keeps the matching maximal
                    for r2 in self.matroid.adjacency[l]:
                        if r2 not in self.match_of_r:
                            self._run_match(r2)
                        if l in self.match_of_l:
                            break
        after = set(self.match_of_l)
        changes = OracleChanges()
        changes.removed = sorted(before - after)
        changes.added = [(e, self.w_val[e]) for e in sorted(after - before)]
        if l in before and l in after:
            # still matched at a lower weight; report a move so callers
            # re-bucket the vertex
            changes.removed.append(l)
            changes.added.append((l, self.w_val[l]))
        return changes

    def freeze(self, l: int) -> None:
        if l not in self.match_of_l:
            raise ValueError("only matched vertices can be frozen")
        self.frozen.add(l)

    # -- inspection --------------------------------------------------------

    def matched_left(self) -> list[int]:
        return sorted(self.match_of_l)

    def matching(self) -> dict[int, int]:
        return dict(self.match_of_l)

    def weight_of(self, l: int) -> float:
        return self.w_val[l]

    def approx_base_weight(self) -> float:
        return sum(
            self.w_val[l] for l in self.match_of_l if l not in self.fallback
        )

    @property
    def op_counters(self) -> dict[str, int]:
        return {
            "scans": self.scan_steps + self.fallback_steps,
            "pointer_scans": self.scan_steps,
            "fallback_scans": self.fallback_steps,
        }


class DecMatching:
    """Near-maximum matching under left-vertex deletions.

    The matching never has an augmenting path of at most ``2 + 2/eps``
    edges, so its size stays within (1-eps) of the maximum.  Left vertices
    matched once stay matched until deleted.  Deletion pins the vertex to a
    fresh degree-1 right vertex and repairs from its abandoned partner with
    one bounded-depth augmenting search.
    """

    def __init__(self, matroid: TransversalMatroid, epsilon: float) -> None:
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        self.matroid = matroid
        self.eps = epsilon
        self.max_len = 2 + 2 / epsilon
        self.num_right = matroid.num_right
        self.present: set[int] = set()
        self.deleted: set[int] = set()
        self.match_of_l: dict[int, int] = {}
        self.match_of_r: dict[int, int] = {}
        self.rank: dict[int, int] = {}
        self.dummy_of: dict[int, int] = {}
        self._next_dummy = matroid.num_right
        self._n_r: list[list[int]] = [[] for _ in range(matroid.num_right)]
        self.batch_inserts = 0
        self.deletes = 0

    # -- augmenting search -------------------------------------------------

    def _neighbors(self, r: int) -> list[int]:
        return sorted(self._n_r[r], key=lambda l: (self.rank[l], l))

    def _augment_from(self, r0: int) -> int | None:
        """Shortest augmenting path of at most max_len edges, or None."""
        parent_l: dict[int, int] = {}
        frontier = [r0]
        seen_r = {r0}
        seen_l: set[int] = set()
        depth = 1
        while frontier and 2 * depth - 1 <= self.max_len:
            layer: list[int] = []
            for r in frontier:
                for l in self._neighbors(r):
                    if l in seen_l:
                        continue
                    seen_l.add(l)
                    parent_l[l] = r
                    if l not in self.match_of_l:
                        return self._apply_path(l, parent_l)
                    layer.append(l)
            frontier = []
            for l in layer:
                rm = self.match_of_l[l]
                if rm >= self.num_right or rm in seen_r:
                    continue  # pinned-to-dummy vertices are dead ends
                seen_r.add(rm)
                frontier.append(rm)
            depth += 1
        return None

    def _apply_path(self, l_end: int, parent_l: dict[int, int]) -> int:
        l = l_end
        while True:
            r = parent_l[l]
            prev = self.match_of_r.get(r)
            self.match_of_l[l] = r
            self.match_of_r[r] = l
            self.rank[l] += 1
            if prev is None:
                break
            l = prev
        return l_end

    def _exhaust(self) -> list[int]:
        """Augment until no short augmenting path remains."""
        newly: list[int] = []
        progress = True
        while progress:
            progress = False
            for r in range(self.num_right):
                if r in self.match_of_r:
                    continue
                got = self._augment_from(r)
                if got is not None:
                    newly.append(got)
                    progress = True
        return newly

    # -- public operations -------------------------------------------------

    def batch_insert(self, elems: Iterable[int]) -> list[int]:
        """Rebuild on the surviving ground set plus ``elems``.

        Every left vertex matched before the rebuild is matched afterwards
        as well; the return value lists the vertices matched beyond those.
        """
        new = sorted(set(elems))
        for l in new:
            if not 0 <= l < self.matroid.n:
                raise ValueError(f"element {l} out of range")
            if l in self.present or l in self.deleted:
                raise ValueError(f"element {l} was already inserted")
        self.batch_inserts += 1
        prior = sorted((l, r) for l, r in self.match_of_l.items() if r < self.num_right)
        self.present.update(new)
        self.match_of_l = {}
        self.match_of_r = {}
        self.dummy_of = {}
        self._next_dummy = self.num_right
        self.rank = {l: 0 for l in self.present}
        self._n_r = [[] for _ in range(self.num_right)]
        for l in sorted(self.present):
            for r in self.matroid.adjacency[l]:
                self._n_r[r].append(l)
        seeded: set[int] = set()
        for l, r in prior:
            # force the prior basis pair before anything else competes
            self.match_of_l[l] = r
            self.match_of_r[r] = l
            self.rank[l] += 1
            seeded.add(r)
        for r in range(self.num_right):
            if r not in seeded:
                self._augment_from(r)
        self._exhaust()
        before = {l for l, _ in prior}
        return sorted(l for l in self.match_of_l if l not in before)

    def delete(self, l: int) -> list[int]:
        if l not in self.present:
            raise ValueError(f"element {l} is not present")
        self.deletes += 1
        self.present.discard(l)
        self.deleted.add(l)
        dummy = self._next_dummy
        self._next_dummy += 1
        self.dummy_of[dummy] = l
        r_old = self.match_of_l.get(l)
        self.match_of_l[l] = dummy
        self.match_of_r[dummy] = l
        if r_old is None:
            return []
        del self.match_of_r[r_old]
        got = self._augment_from(r_old)
        return [] if got is None else [got]

    def test(self, l: int) -> bool:
        r = self.match_of_l.get(l)
        return r is not None and r < self.num_right

    # -- inspection --------------------------------------------------------

    def basis(self) -> list[int]:
        return sorted(l for l, r in self.match_of_l.items() if r < self.num_right)

    def matching(self) -> dict[int, int]:
        return {l: r for l, r in self.match_of_l.items() if r < self.num_right}

    @property
    def op_counters(self) -> dict[str, int]:
        return {"batch_inserts": self.batch_inserts, "deletes": self.deletes}
