"""Monotone submodular objectives and multilinear-extension sampling.

Three families cover everything the generator emits: weighted coverage,
facility location, and additive.  Every oracle counts queries: ``value`` is
one query, ``marginal`` two, a batch over ``s`` sampled sets is ``s`` queries
and a batched marginal estimate ``2*s`` per queried element.  Budget
instrumentation everywhere else trusts these counts.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from . import kernels

# sampled-batch evaluation may fan out across threads; the estimate is a mean
# over rows, so chunked evaluation with a fixed combine order stays exact
_EVAL_THREADS = 1


def set_eval_threads(count: int) -> None:
    """Number of worker threads for batched marginal estimates (1 = serial)."""
    global _EVAL_THREADS
    if count < 1:
        raise ValueError("thread count must be at least 1")
    _EVAL_THREADS = count


class ValueOracle:
    """Base class: query counting plus the batch entry points."""

    kind = "abstract"

    def __init__(self, n: int) -> None:
        if n <= 0:
            raise ValueError("ground set must be nonempty")
        self.n = n
        self.query_count = 0

    # -- single-set queries -------------------------------------------------

    def value(self, subset: Iterable[int]) -> float:
        self.query_count += 1
        return self._value(self._as_indices(subset))

    def marginal(self, elem: int, subset: Iterable[int]) -> float:
        """f(S + e) - f(S), counted as two queries."""
        base = self._as_indices(subset)
        with_e = np.append(base, np.int64(elem)) if elem not in set(base.tolist()) else base
        self.query_count += 2
        return self._value(with_e) - self._value(base)

    # -- batched queries ----------------------------------------------------

    def batch_values(self, sets: np.ndarray) -> np.ndarray:
        """Values for each row of an ``(s, n)`` uint8 subset matrix."""
        if sets.ndim != 2 or sets.shape[1] != self.n:
            raise ValueError("subset matrix shape mismatch")
        self.query_count += sets.shape[0]
        return self._batch_values(np.ascontiguousarray(sets, dtype=np.uint8))

    def batch_marginal_means(self, sets: np.ndarray, elems: Sequence[int]) -> np.ndarray:
        """Mean of f(R+e) - f(R-e) over the rows of ``sets``, per element.

        Costs ``2 * len(elems) * rows`` queries: each sampled marginal is two
        value queries.
        """
        if sets.ndim != 2 or sets.shape[1] != self.n:
            raise ValueError("subset matrix shape mismatch")
        q = np.asarray(elems, dtype=np.int64)
        if q.size and (q.min() < 0 or q.max() >= self.n):
            raise ValueError("element id out of range")
        self.query_count += 2 * sets.shape[0] * q.shape[0]
        if q.size == 0:
            return np.zeros(0, dtype=np.float64)
        rows = np.ascontiguousarray(sets, dtype=np.uint8)
        workers = _EVAL_THREADS
        if workers > 1 and rows.shape[0] >= 2 * workers:
            chunks = np.array_split(rows, workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(
                    pool.map(
                        lambda c: self._batch_marginal_means(
                            np.ascontiguousarray(c), q
                        ),
                        chunks,
                    )
                )
            sizes = np.array([c.shape[0] for c in chunks], dtype=np.float64)
            stacked = np.vstack(parts)
            return (sizes[:, None] * stacked).sum(axis=0) / rows.shape[0]
        return self._batch_marginal_means(rows, q)

    # -- helpers ------------------------------------------------------------

    def _as_indices(self, subset: Iterable[int]) -> np.ndarray:
        idx = np.fromiter(subset, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ValueError("element id out of range")
        return idx

    def _value(self, idx: np.ndarray) -> float:
        raise NotImplementedError

    def _batch_values(self, sets: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _batch_marginal_means(self, sets: np.ndarray, elems: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class CoverageOracle(ValueOracle):
    """f(S) = total weight of universe items covered by S."""

    kind = "coverage"

    def __init__(self, covers: Sequence[Sequence[int]], universe_weights: Sequence[float]) -> None:
        super().__init__(len(covers))
        self.universe_weights = np.asarray(universe_weights, dtype=np.float64)
        if self.universe_weights.size and self.universe_weights.min() < 0:
            raise ValueError("universe weights must be nonnegative")
        nu = self.universe_weights.shape[0]
        flat: list[int] = []
        indptr = [0]
        for cover in covers:
            for u in cover:
                if not 0 <= u < nu:
                    raise ValueError("covered item id out of range")
            flat.extend(sorted(set(cover)))
            indptr.append(len(flat))
        self.indices = np.asarray(flat, dtype=np.int64)
        self.indptr = np.asarray(indptr, dtype=np.int64)

    def _value(self, idx: np.ndarray) -> float:
        covered: set[int] = set()
        for e in idx.tolist():
            covered.update(self.indices[self.indptr[e]:self.indptr[e + 1]].tolist())
        if not covered:
            return 0.0
        return float(self.universe_weights[np.fromiter(covered, dtype=np.int64)].sum())

    def _batch_values(self, sets: np.ndarray) -> np.ndarray:
        return kernels.coverage_values(sets, self.indptr, self.indices, self.universe_weights)

    def _batch_marginal_means(self, sets: np.ndarray, elems: np.ndarray) -> np.ndarray:
        return kernels.coverage_marginal_means(
            sets, elems, self.indptr, self.indices, self.universe_weights
        )


class FacilityLocationOracle(ValueOracle):
    """f(S) = sum over clients of the best similarity to any member of S."""

    kind = "facility"

    def __init__(self, similarity: np.ndarray) -> None:
        sim = np.asarray(similarity, dtype=np.float64)
        if sim.ndim != 2:
            raise ValueError("similarity must be a 2-d matrix")
        if sim.size and sim.min() < 0:
            raise ValueError("similarities must be nonnegative")
        super().__init__(sim.shape[0])
        self.similarity = np.ascontiguousarray(sim)

    def _value(self, idx: np.ndarray) -> float:
        if idx.size == 0:
            return 0.0
        return float(self.similarity[idx].max(axis=0).sum())

    def _batch_values(self, sets: np.ndarray) -> np.ndarray:
        return kernels.facility_values(sets, self.similarity)

    def _batch_marginal_means(self, sets: np.ndarray, elems: np.ndarray) -> np.ndarray:
        return kernels.facility_marginal_means(sets, elems, self.similarity)


class AdditiveOracle(ValueOracle):
    """f(S) = sum of per-element weights; the degenerate sanity case."""

    kind = "additive"

    def __init__(self, weights: Sequence[float]) -> None:
        w = np.asarray(weights, dtype=np.float64)
        if w.size and w.min() < 0:
            raise ValueError("weights must be nonnegative")
        super().__init__(w.shape[0])
        self.weights = w

    def _value(self, idx: np.ndarray) -> float:
        return float(self.weights[idx].sum())

    def _batch_values(self, sets: np.ndarray) -> np.ndarray:
        return sets.astype(np.float64) @ self.weights

    def _batch_marginal_means(self, sets: np.ndarray, elems: np.ndarray) -> np.ndarray:
        # marginals of an additive function ignore the sampled base set
        return self.weights[elems].copy()


class ResidualOracle(ValueOracle):
    """f(T | S0) = f(S0 + T) - f(S0), with queries counted on the base oracle.

    Phase 2 runs on this contraction of the phase-1 output.  ``query_count``
    on the residual mirrors the base oracle's count so one counter covers
    both phases; callers read per-phase deltas.
    """

    kind = "residual"

    def __init__(self, base: ValueOracle, frozen: Iterable[int]) -> None:
        self.base = base
        ValueOracle.__init__(self, base.n)
        self.frozen = sorted(set(frozen))
        self._frozen_mask = np.zeros(base.n, dtype=np.uint8)
        for e in self.frozen:
            self._frozen_mask[e] = 1
        self._offset = base._value(np.asarray(self.frozen, dtype=np.int64))

    def value(self, subset: Iterable[int]) -> float:
        self.base.query_count += 1
        idx = self._as_indices(subset)
        merged = np.unique(np.concatenate([idx, np.asarray(self.frozen, dtype=np.int64)])) \
            if self.frozen else idx
        return self.base._value(merged) - self._offset

    def batch_values(self, sets: np.ndarray) -> np.ndarray:
        self.base.query_count += sets.shape[0]
        merged = np.maximum(np.ascontiguousarray(sets, dtype=np.uint8), self._frozen_mask)
        return self.base._batch_values(merged) - self._offset

    def batch_marginal_means(self, sets: np.ndarray, elems: Sequence[int]) -> np.ndarray:
        q = np.asarray(elems, dtype=np.int64)
        self.base.query_count += 2 * sets.shape[0] * q.shape[0]
        if q.size == 0:
            return np.zeros(0, dtype=np.float64)
        merged = np.maximum(np.ascontiguousarray(sets, dtype=np.uint8), self._frozen_mask)
        return self.base._batch_marginal_means(merged, q)

    def marginal(self, elem: int, subset: Iterable[int]) -> float:
        self.base.query_count += 2
        idx = set(self._as_indices(subset).tolist()) | set(self.frozen)
        lo = self.base._value(np.asarray(sorted(idx), dtype=np.int64))
        hi = self.base._value(np.asarray(sorted(idx | {elem}), dtype=np.int64))
        return hi - lo

    @property  # type: ignore[override]
    def query_count(self) -> int:
        return self.base.query_count

    @query_count.setter
    def query_count(self, v: int) -> None:
        # ValueOracle.__init__ assigns 0 once; redirect everything to the base
        if v:
            self.base.query_count = v


def sample_subsets(x: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` independent subsets from product distribution ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.min() < -1e-12 or x.max() > 1.0 + 1e-12:
        raise ValueError("coordinates must lie in [0, 1]")
    return (rng.random((count, x.shape[0])) < x).astype(np.uint8)


def estimate_marginals_on_point(
    f: ValueOracle,
    x: np.ndarray,
    elems: Sequence[int],
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sampled multilinear marginals at ``x`` for each queried element.

    Returns the mean of ``f(R+e) - f(R-e)`` over ``samples`` subsets drawn
    from ``x``, all elements sharing the same draw.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    sets = sample_subsets(x, samples, rng)
    return f.batch_marginal_means(sets, elems)


def estimate_marginal_on_point(
    f: ValueOracle, elem: int, x: np.ndarray, samples: int, rng: np.random.Generator
) -> float:
    """Single-element convenience wrapper around the batched estimator."""
    return float(estimate_marginals_on_point(f, x, [elem], samples, rng)[0])
