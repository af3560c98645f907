"""Two-phase submodular maximization under one matroid constraint.

Phase 1 freezes a short prefix of very heavy elements: it maintains an
approximate max-weight basis under rounded marginal weights, repeatedly
audits a random batch for staleness, and only when a majority of the batch
is still fresh does it freeze one uniform basis element.  Phase 2 runs a
sampled continuous greedy on the contraction ``f(. | S0)``, assembling each
round's direction with a descending-thresholds routine, and swap rounding
turns the fractional point into a single independent set.  The combined
guarantee is ``1 - 1/e - eps`` in expectation for monotone submodular
objectives.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import WeightClassifier, estimate_opt
from .graphic import ContractedGraph
from .instances import (
    STREAM_MULTILINEAR,
    STREAM_PHASE1,
    STREAM_ROUNDING,
    Instance,
    Matroid,
    stream_rng,
)
from .laminar import TopTreeLaminarBasis
from .objectives import ResidualOracle, ValueOracle, estimate_marginals_on_point
from .rounding import swap_round
from .sampler import BucketLists
from .transversal import DecMatching, LStableMatching


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs that trade constants for speed without touching the guarantee.

    ``threshold_factor`` scales the phase-1 stopping threshold, and
    ``sample_scale`` the per-iteration audit batch; both match the analysis
    defaults.  ``phase1_eps_fraction`` is the share of the accuracy budget
    spent in phase 1.  ``stale_gate`` picks between the per-group count form
    of the freshness test and the aggregate weight form.
    """

    threshold_factor: float = 50.0
    sample_scale: float = 128.0
    sample_count_scale: float = 1.0
    phase1_eps_fraction: float = 0.25
    stale_gate: str = "count"
    verify_rounding: bool = True
    max_phase1_iterations: int | None = None


DEFAULT_CONFIG = OptimizerConfig()


class MaxWeightOracle:
    """Dynamic approximate max-weight basis plus weight-class sampling pool.

    Wraps the family-specific structure behind one phase-1 surface.  Every
    structural change is mirrored into :class:`BucketLists` over the
    unfrozen part of the basis, so batch sampling and uniform sampling stay
    proportional to the number of weight classes.  Stored weights are the
    rounded class values, never raw marginals.
    """

    def __init__(
        self,
        matroid: Matroid,
        classifier: WeightClassifier,
        rounded: Mapping[int, float],
        classes: Mapping[int, int],
        epsilon: float,
    ) -> None:
        self.matroid = matroid
        self.classifier = classifier
        self.classes = dict(classes)
        kind = matroid.kind
        if kind == "laminar":
            lam = TopTreeLaminarBasis(matroid)
            for e in range(matroid.n):
                lam.insert(e, rounded[e])
            self.structure = lam
            self._members = lam.basis
        elif kind == "graphic":
            graph = ContractedGraph(matroid, dict(rounded))
            self.structure = graph
            self._members = graph.forest
        elif kind == "transversal":
            stable = LStableMatching(matroid, dict(rounded), epsilon)
            self.structure = stable
            self._members = stable.matched_left
        else:
            raise ValueError(f"unsupported matroid kind: {kind}")
        self.buckets = BucketLists(classifier)
        for e in self._members():
            self.buckets.insert(e, self.classes[e])
        self.frozen: list[int] = []

    # -- inspection --------------------------------------------------------

    def basis(self) -> list[int]:
        return sorted(self._members())

    def approx_base_weight(self) -> float:
        return self.structure.approx_base_weight()

    def pool_size(self) -> int:
        return len(self.buckets)

    def class_of(self, elem: int) -> int:
        return self.classes[elem]

    def rounded_weight(self, elem: int) -> float:
        return self.classifier.class_value(self.classes[elem])

    @property
    def op_counters(self) -> dict[str, int]:
        return self.structure.op_counters

    # -- mutation ----------------------------------------------------------

    def sample(self, t: float, rng: np.random.Generator) -> list[tuple[int, float]]:
        return self.buckets.sample(t, rng)

    def uniform_sample(self, rng: np.random.Generator) -> int:
        return self.buckets.uniform_sample(rng)

    def decrement(self, elem: int, class_index: int) -> None:
        if class_index <= self.classes[elem]:
            raise ValueError("decrement must push the class down")
        self.classes[elem] = class_index
        changes = self.structure.decrement(
            elem, self.classifier.class_value(class_index)
        )
        self._apply(changes)

    def freeze(self, elem: int) -> None:
        changes = self.structure.freeze(elem)
        if changes is not None:
            self._apply(changes)
        # structures whose freeze keeps the element in place return None;
        # either way it must leave the sampling pool for good
        if elem in self.buckets:
            self.buckets.remove(elem)
        self.frozen.append(elem)

    def _apply(self, changes) -> None:
        for e in changes.removed:
            self.buckets.remove(e)
        for e, _w in changes.added:
            self.buckets.insert(e, self.classes[e])


def build_phase1_oracle(
    f: ValueOracle,
    matroid: Matroid,
    classifier: WeightClassifier,
    epsilon: float,
) -> MaxWeightOracle:
    """Price every singleton once and stand up the rounded-weight basis."""
    n = matroid.n
    base = f.value(())
    rows = np.eye(n, dtype=np.uint8)
    singles = f.batch_values(rows)
    classes: dict[int, int] = {}
    rounded: dict[int, float] = {}
    for e in range(n):
        w = max(float(singles[e]) - base, 0.0)
        classes[e] = classifier.weight_class(w)
        rounded[e] = classifier.class_value(classes[e])
    return MaxWeightOracle(matroid, classifier, rounded, classes, epsilon)


@dataclass
class LSGState:
    """Running tally of one phase-1 execution."""

    solution: list[int] = field(default_factory=list)
    iterations: int = 0
    decrements: int = 0
    samples_drawn: int = 0


def _gate_passes(probes: Sequence[tuple[float, bool, float]], mode: str) -> bool:
    """Freshness gate over one audited batch of (probability, stale, weight).

    The count form demands a strict fresh majority separately among the
    elements sampled with probability one and among the rest; an empty group
    passes.  The weight form compares stale rounded weight against half the
    batch total.
    """
    if mode == "count":
        sure = [stale for p, stale, _ in probes if p >= 1.0]
        rest = [stale for p, stale, _ in probes if p < 1.0]
        return (not sure or 2 * sum(sure) < len(sure)) and (
            not rest or 2 * sum(rest) < len(rest)
        )
    if mode == "weight":
        total = sum(w for _, _, w in probes)
        stale_w = sum(w for _, stale, w in probes if stale)
        return total == 0.0 or 2.0 * stale_w < total
    raise ValueError(f"unknown stale gate: {mode}")


def lazy_sampling_greedy_plus(
    f: ValueOracle,
    oracle: MaxWeightOracle,
    epsilon: float,
    opt_estimate: float,
    rng: np.random.Generator,
    config: OptimizerConfig = DEFAULT_CONFIG,
) -> LSGState:
    """Freeze heavy elements until the residual basis weight is moderate.

    Each iteration samples a weight-proportional batch from the unfrozen
    basis, refreshes the rounded class of every stale member, and freezes
    one uniform basis element only when the batch was mostly fresh.  The
    loop exits once the approximate basis weight drops below
    ``threshold_factor / epsilon`` times the optimum estimate, which at
    moderate scales happens immediately and leaves the frozen set empty.
    """
    if not 0.0 < epsilon < 1.0 / 3.0:
        raise ValueError("epsilon must lie in (0, 1/3)")
    state = LSGState()
    if opt_estimate <= 0.0:
        return state
    n = oracle.matroid.n
    classifier = oracle.classifier
    threshold = (config.threshold_factor / epsilon) * opt_estimate
    t_param = config.sample_scale * math.log(max(n, 2))
    cap = config.max_phase1_iterations
    if cap is None:
        # every iteration either reclasses an element downward or freezes
        # one, so this budget is only hit on a broken structure
        cap = 2 * n * (classifier.num_classes + 2) + 16
    mask = np.zeros(n, dtype=np.uint8)
    current = f.value(())
    while oracle.approx_base_weight() >= threshold:
        if oracle.pool_size() == 0:
            break
        state.iterations += 1
        if state.iterations > cap:
            raise RuntimeError("sampling loop exceeded its iteration budget")
        drawn = oracle.sample(t_param, rng)
        state.samples_drawn += len(drawn)
        probes: list[tuple[float, bool, float]] = []
        if drawn:
            rows = np.tile(mask, (len(drawn), 1))
            for i, (e, _p) in enumerate(drawn):
                rows[i, e] = 1
            vals = f.batch_values(rows)
            for (e, p), v in zip(drawn, vals):
                w_true = max(float(v) - current, 0.0)
                j_new = classifier.weight_class(w_true)
                j_old = oracle.class_of(e)
                stale = j_new > j_old
                probes.append((p, stale, classifier.class_value(j_old)))
                if stale:
                    oracle.decrement(e, j_new)
                    state.decrements += 1
        if _gate_passes(probes, config.stale_gate):
            if oracle.pool_size() == 0:
                break
            e = oracle.uniform_sample(rng)
            oracle.freeze(e)
            state.solution.append(e)
            mask[e] = 1
            current = f.value(state.solution)
    return state


@dataclass
class FractionalSolution:
    """Convex combination of bases produced by the continuous phase."""

    n: int
    bases: list[tuple[float, list[int]]]

    def point(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.float64)
        for weight, base in self.bases:
            for e in base:
                x[e] += weight
        return np.minimum(x, 1.0)


class MarginalEstimator:
    """Monte Carlo marginal rates of the multilinear extension.

    ``rates(elems, base)`` prices every candidate at the current point
    shifted one step along ``base``: it draws a shared batch of subsets and
    averages ``f(R + e) - f(R - e)``.  Sharing the draws across candidates
    makes repricing after a basis change one batched oracle call.
    """

    def __init__(
        self,
        f: ValueOracle,
        x: np.ndarray,
        step: float,
        samples: int,
        rng: np.random.Generator,
    ) -> None:
        self.f = f
        self.x = np.asarray(x, dtype=np.float64).copy()
        self.step = float(step)
        self.samples = int(samples)
        self.rng = rng
        self.calls = 0

    def rates(self, elems: Sequence[int], base: Iterable[int]) -> np.ndarray:
        if not len(elems):
            return np.zeros(0, dtype=np.float64)
        y = self.x.copy()
        for e in base:
            y[e] = min(1.0, y[e] + self.step)
        self.calls += 1
        return estimate_marginals_on_point(self.f, y, list(elems), self.samples, self.rng)

    def rate(self, elem: int, base: Iterable[int]) -> float:
        return float(self.rates([elem], base)[0])


class CountingChecker:
    """Independence tester that tallies its oracle traffic."""

    def __init__(self, checker) -> None:
        self.checker = checker
        self.tests = 0
        self.inserts = 0

    def test(self, elem: int) -> bool:
        self.tests += 1
        return self.checker.test(elem)

    def insert(self, elem: int) -> None:
        self.inserts += 1
        self.checker.insert(elem)


def dt_incremental(
    estimator: MarginalEstimator,
    checker: CountingChecker,
    epsilon: float,
    opt_estimate: float,
    elements: Sequence[int],
    rank: int,
) -> list[int]:
    """Build a near-max-rate basis by descending thresholds, insert-only.

    The threshold ladder starts at the best singleton rate and decays by
    ``1 - epsilon`` down to ``epsilon / rank`` times the optimum estimate.
    At each level the survivors above the bar are re-priced against the
    current partial basis; a passing element is tested exactly once and
    either joins the basis or is discarded for good.  Whatever remains
    after the ladder tops the basis off in best-rate order, so the result
    always has full rank.

    Rates are cached per basis size: while nothing was inserted, the cached
    batch still prices the same partial basis, so one batched estimate per
    insertion covers the whole ladder.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    basis: list[int] = []
    active = sorted(elements)
    alive = set(active)
    if rank <= 0 or not active:
        return basis
    cache: dict[int, float] = {}
    cache_size = -1

    def rate_of(e: int) -> float:
        nonlocal cache, cache_size
        if cache_size != len(basis):
            vals = estimator.rates(active, basis)
            cache = {a: float(v) for a, v in zip(active, vals)}
            cache_size = len(basis)
        return cache[e]

    tau = max(rate_of(e) for e in active)
    floor = (epsilon / rank) * opt_estimate
    while floor > 0.0 and active and len(basis) < rank and tau >= floor:
        for e in [e for e in active if rate_of(e) >= tau]:
            if e not in alive:
                continue
            if rate_of(e) < tau:
                # fell below the bar after an insertion; later levels get it
                continue
            if checker.test(e):
                checker.insert(e)
                basis.append(e)
            active.remove(e)
            alive.discard(e)
            if len(basis) >= rank:
                break
        tau *= 1.0 - epsilon
    if len(basis) < rank and active:
        order = sorted(active, key=lambda e: (-rate_of(e), e))
        for e in order:
            if len(basis) >= rank:
                break
            if checker.test(e):
                checker.insert(e)
                basis.append(e)
    if len(basis) != rank:
        raise RuntimeError("threshold sweep failed to assemble a basis")
    return basis


def dt_approx_indep_set(
    estimator: MarginalEstimator,
    structure: DecMatching,
    epsilon: float,
    opt_estimate: float,
    elements: Sequence[int],
    rank: int,
    pinned: Iterable[int] = (),
) -> list[int]:
    """Near-max-rate independent set via batched inserts with repair.

    Transversal counterpart of :func:`dt_incremental`: each threshold level
    submits its whole cohort in one rebuild, then a worklist audits every
    newly matched vertex and deletes those whose fresh rate fell below the
    level, feeding replacement matches back into the audit.  ``pinned``
    vertices are preloaded contraction elements: they stay matched, never
    get audited, and are excluded from the returned set.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    pinned_set = set(pinned)
    pending = sorted(e for e in elements if e not in pinned_set)

    def current() -> list[int]:
        return [e for e in structure.basis() if e not in pinned_set]

    if rank <= 0 or not pending:
        return current()
    stamp = 0
    cache: dict[int, float] = {}
    cache_stamp = -1

    def rate_of(e: int) -> float:
        nonlocal cache, cache_stamp
        if cache_stamp != stamp:
            vals = estimator.rates(pending, current())
            cache = {a: float(v) for a, v in zip(pending, vals)}
            cache_stamp = stamp
        return cache[e]

    tau = max(rate_of(e) for e in pending)
    floor = (epsilon / rank) * opt_estimate
    while floor > 0.0 and pending and tau >= floor:
        batch = [e for e in pending if rate_of(e) >= tau]
        if batch:
            joined = structure.batch_insert(batch)
            chosen = set(batch)
            pending = [e for e in pending if e not in chosen]
            stamp += 1
            queue = deque(sorted(joined))
            while queue:
                e = queue.popleft()
                if e in pinned_set or not structure.test(e):
                    continue
                others = [v for v in current() if v != e]
                if estimator.rate(e, others) >= tau:
                    continue
                replacements = structure.delete(e)
                stamp += 1
                queue.extend(
                    sorted(v for v in replacements if v not in pinned_set)
                )
        tau *= 1.0 - epsilon
    return sorted(current())


def _variant_for(kind: str) -> str:
    if kind in ("laminar", "graphic"):
        return "incremental"
    if kind == "transversal":
        return "approx"
    raise ValueError(f"unsupported matroid kind: {kind}")


def _pad_transversal(
    matroid: Matroid,
    frozen: set[int],
    partial: list[int],
    elements: Sequence[int],
    estimator: MarginalEstimator,
    rank: int,
) -> list[int]:
    """Extend an independent set to a basis of the contraction exactly."""
    if len(partial) >= rank:
        return partial
    checker = matroid.checker(sorted(frozen) + list(partial))
    have = set(partial)
    rest = [e for e in elements if e not in have]
    vals = estimator.rates(rest, sorted(have))
    order = sorted(zip(rest, vals), key=lambda t: (-float(t[1]), t[0]))
    out = list(partial)
    for e, _v in order:
        if len(out) >= rank:
            break
        if checker.test(e):
            checker.insert(e)
            out.append(e)
    return out


def continuous_greedy(
    f: ValueOracle,
    matroid: Matroid,
    frozen: Iterable[int],
    epsilon: float,
    opt_estimate: float,
    rng: np.random.Generator,
    variant: str | None = None,
    config: OptimizerConfig = DEFAULT_CONFIG,
) -> tuple[FractionalSolution, dict[str, int]]:
    """Sampled continuous greedy over the contraction by ``frozen``.

    Runs ``ceil(1 / epsilon)`` rounds; each round builds one basis of the
    contraction with the kind-appropriate descending-thresholds routine and
    advances the fractional point one step along it.  Returns the convex
    combination of round bases plus a counter dictionary.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    n = matroid.n
    frozen_set = set(frozen)
    elements = [e for e in range(n) if e not in frozen_set]
    residual_rank = matroid.rank() - len(frozen_set)
    if variant is None:
        variant = _variant_for(matroid.kind)
    counters = {
        "phase2_rounds": 0,
        "estimator_batches": 0,
        "dt_test_calls": 0,
        "dt_insert_calls": 0,
        "dt_batch_inserts": 0,
        "dt_deletes": 0,
    }
    rounds = max(1, math.ceil(1.0 / epsilon))
    step = 1.0 / rounds
    samples = max(
        1,
        math.ceil(
            config.sample_count_scale
            / epsilon
            * math.log(max(n, 2) / epsilon) ** 2
        ),
    )
    counters["samples_per_estimate"] = samples
    if residual_rank <= 0 or not elements:
        return FractionalSolution(n=n, bases=[]), counters
    x = np.zeros(n, dtype=np.float64)
    bases: list[tuple[float, list[int]]] = []
    for _ in range(rounds):
        counters["phase2_rounds"] += 1
        estimator = MarginalEstimator(f, x, step, samples, rng)
        if variant == "incremental":
            checker = CountingChecker(matroid.checker(sorted(frozen_set)))
            b = dt_incremental(
                estimator, checker, epsilon, opt_estimate, elements, residual_rank
            )
            counters["dt_test_calls"] += checker.tests
            counters["dt_insert_calls"] += checker.inserts
        elif variant == "approx":
            structure = DecMatching(matroid, epsilon)
            if frozen_set:
                seeded = structure.batch_insert(sorted(frozen_set))
                if len(seeded) != len(frozen_set):
                    raise RuntimeError("frozen set lost a match during seeding")
            b = dt_approx_indep_set(
                estimator,
                structure,
                epsilon,
                opt_estimate,
                elements,
                residual_rank,
                pinned=frozen_set,
            )
            ops = structure.op_counters
            # seeding the contraction is construction, not algorithm work
            counters["dt_batch_inserts"] += ops["batch_inserts"] - (
                1 if frozen_set else 0
            )
            counters["dt_deletes"] += ops["deletes"]
            b = _pad_transversal(
                matroid, frozen_set, b, elements, estimator, residual_rank
            )
        else:
            raise ValueError(f"unknown variant: {variant}")
        counters["estimator_batches"] += estimator.calls
        if len(b) != residual_rank:
            raise RuntimeError("round direction is not a full basis")
        b = sorted(b)
        for e in b:
            x[e] = min(1.0, x[e] + step)
        bases.append((step, b))
    return FractionalSolution(n=n, bases=bases), counters


@dataclass
class PipelineResult:
    """Everything one optimization run produced, counters included."""

    solution: list[int]
    value: float
    frozen: list[int]
    fractional: FractionalSolution | None
    counters: dict[str, int | float]
    epsilon: float
    seed: int
    variant: str
    opt_estimate: float
    wall_time: float


def run_pipeline(
    instance: Instance,
    epsilon: float,
    seed: int,
    config: OptimizerConfig = DEFAULT_CONFIG,
) -> PipelineResult:
    """Full pipeline: estimate, freeze, continuous greedy, swap rounding.

    Randomness is split into independent substreams of ``seed`` per stage,
    so phase 1, the multilinear sampling, and the rounding coins do not
    interact.  Counter keys are stable across kinds; a kind that skips a
    stage reports zeros.
    """
    if not 0.0 < epsilon < 1.0 / 3.0:
        raise ValueError("epsilon must lie in (0, 1/3)")
    start = time.perf_counter()
    matroid = instance.matroid
    f = instance.build_objective()
    n = matroid.n
    rank = matroid.rank()
    variant = _variant_for(matroid.kind)
    counters: dict[str, int | float] = {}
    if rank <= 0:
        value = f.value(())
        counters["total_f_queries"] = f.query_count
        return PipelineResult(
            [], value, [], None, counters, epsilon, seed, variant, 0.0,
            time.perf_counter() - start,
        )
    m_est = estimate_opt(f, matroid)
    counters["estimate_f_queries"] = f.query_count
    if m_est <= 0.0:
        # flat objective: any basis is optimal, skip both phases
        checker = matroid.checker()
        solution = []
        for e in range(n):
            if checker.test(e):
                checker.insert(e)
                solution.append(e)
        value = f.value(solution)
        counters["total_f_queries"] = f.query_count
        return PipelineResult(
            solution, value, [], None, counters, epsilon, seed, variant,
            m_est, time.perf_counter() - start,
        )
    eps1 = config.phase1_eps_fraction * epsilon
    classifier = WeightClassifier(m_est, eps1, rank)
    oracle = build_phase1_oracle(f, matroid, classifier, eps1)
    state = lazy_sampling_greedy_plus(
        f, oracle, eps1, m_est, stream_rng(seed, STREAM_PHASE1), config
    )
    s0 = sorted(state.solution)
    counters["phase1_f_queries"] = f.query_count - counters["estimate_f_queries"]
    counters["phase1_iterations"] = state.iterations
    counters["phase1_decrements"] = state.decrements
    counters["phase1_samples"] = state.samples_drawn
    counters["phase1_frozen"] = len(s0)
    for key, val in oracle.op_counters.items():
        counters[f"phase1_{key}"] = val
    after_phase1 = f.query_count
    residual = ResidualOracle(f, s0)
    fractional, cg_counters = continuous_greedy(
        residual,
        matroid,
        s0,
        epsilon,
        m_est,
        stream_rng(seed, STREAM_MULTILINEAR),
        variant,
        config,
    )
    counters.update(cg_counters)
    counters["phase2_f_queries"] = f.query_count - after_phase1
    if fractional.bases:
        full = FractionalSolution(
            n=n,
            bases=[(a, sorted(set(b) | set(s0))) for a, b in fractional.bases],
        )
        solution = sorted(
            swap_round(
                full,
                matroid,
                stream_rng(seed, STREAM_ROUNDING),
                verify=config.verify_rounding,
            )
        )
    else:
        solution = list(s0)
    if not matroid.is_independent(solution):
        raise RuntimeError("rounded output failed the independence check")
    value = f.value(solution)
    counters["total_f_queries"] = f.query_count
    return PipelineResult(
        solution=solution,
        value=value,
        frozen=s0,
        fractional=fractional,
        counters=counters,
        epsilon=epsilon,
        seed=seed,
        variant=variant,
        opt_estimate=m_est,
        wall_time=time.perf_counter() - start,
    )
