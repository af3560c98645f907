from __future__ import annotations

import itertools

import numpy as np
import pytest

from matsub.instances import generate_instance, stream_rng
from matsub.objectives import (
    AdditiveOracle,
    CoverageOracle,
    FacilityLocationOracle,
    ResidualOracle,
    estimate_marginal_on_point,
    estimate_marginals_on_point,
    sample_subsets,
)


def _tiny_coverage() -> CoverageOracle:
    # universe {0, 1}; element 0 covers {0}, element 1 covers {1}, element 2 both
    return CoverageOracle([[0], [1], [0, 1]], [1.0, 1.0])


def test_coverage_values() -> None:
    f = _tiny_coverage()
    assert f.value(()) == 0.0
    assert f.value([0]) == 1.0
    assert f.value([0, 1]) == 2.0
    assert f.value([2]) == 2.0
    assert f.value([0, 1, 2]) == 2.0


def test_coverage_marginals_diminish() -> None:
    f = _tiny_coverage()
    assert f.marginal(2, ()) == 2.0
    assert f.marginal(2, [0]) == 1.0
    assert f.marginal(2, [0, 1]) == 0.0


def test_facility_location_values() -> None:
    sim = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
    f = FacilityLocationOracle(sim)
    assert f.value([0]) == pytest.approx(1.0)
    assert f.value([0, 1]) == pytest.approx(1.7)
    assert f.value([0, 1, 2]) == pytest.approx(1.7)


def test_additive_values() -> None:
    f = AdditiveOracle([2.0, 3.0, 5.0])
    assert f.value([0, 2]) == pytest.approx(7.0)
    assert f.marginal(1, [0, 2]) == pytest.approx(3.0)


def test_monotone_and_submodular_on_random_instances() -> None:
    rng = np.random.default_rng(3)
    for obj in ("coverage", "facility", "additive"):
        inst = generate_instance("laminar", obj, n=8, seed=17)
        f = inst.build_objective()
        for _ in range(40):
            mask = rng.random(inst.n) < 0.4
            small = [int(i) for i in np.flatnonzero(mask)]
            extra = [int(i) for i in np.flatnonzero(rng.random(inst.n) < 0.3)]
            big = sorted(set(small) | set(extra))
            outside = [e for e in range(inst.n) if e not in big]
            if not outside:
                continue
            e = int(rng.choice(outside))
            assert f.value(big) >= f.value(small) - 1e-9
            assert f.marginal(e, small) >= f.marginal(e, big) - 1e-9


def test_query_counting() -> None:
    f = _tiny_coverage()
    assert f.query_count == 0
    f.value([0])
    assert f.query_count == 1
    f.marginal(2, [0])
    assert f.query_count == 3
    f.batch_values(np.zeros((5, 3), dtype=np.uint8))
    assert f.query_count == 8
    rng = stream_rng(0, 0)
    sets = sample_subsets(np.array([0.5, 0.5, 0.5]), 4, rng)
    f.batch_marginal_means(sets, np.array([0, 2]))
    assert f.query_count == 8 + 2 * 4 * 2


def test_batch_values_match_singles() -> None:
    rng = np.random.default_rng(5)
    for obj in ("coverage", "facility", "additive"):
        inst = generate_instance("graphic", obj, n=9, seed=23)
        f = inst.build_objective()
        sets = (rng.random((12, inst.n)) < 0.5).astype(np.uint8)
        batch = f.batch_values(sets)
        for row, got in zip(sets, batch):
            assert got == pytest.approx(f.value(np.flatnonzero(row)))


def test_sample_subsets_marginal_frequencies() -> None:
    rng = stream_rng(42, 2)
    x = np.array([0.0, 0.25, 0.75, 1.0])
    draws = sample_subsets(x, 4000, rng)
    freq = draws.mean(axis=0)
    assert freq[0] == 0.0
    assert freq[3] == 1.0
    assert abs(freq[1] - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 4000)
    assert abs(freq[2] - 0.75) < 4 * np.sqrt(0.25 * 0.75 / 4000)


def _exact_multilinear_marginal(f, x: np.ndarray, e: int) -> float:
    """E[f(R + e) - f(R - e)] for R ~ x, by enumerating the other coordinates."""
    rest = [i for i in range(len(x)) if i != e]
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(rest)):
        prob = 1.0
        subset = []
        for i, b in zip(rest, bits):
            prob *= x[i] if b else 1.0 - x[i]
            if b:
                subset.append(i)
        total += prob * (f.value(subset + [e]) - f.value(subset))
    return total


def test_marginal_estimate_matches_exact_multilinear() -> None:
    inst = generate_instance("laminar", "coverage", n=7, seed=31)
    f = inst.build_objective()
    rng = stream_rng(9, 2)
    x = np.array([0.5, 0.2, 0.8, 0.0, 1.0, 0.4, 0.6])
    elems = np.arange(7)
    samples = 6000
    est = estimate_marginals_on_point(f, x, elems, samples, rng)
    for e in elems:
        exact = _exact_multilinear_marginal(f, x, int(e))
        # marginals are bounded by the max singleton value, crude sigma bound
        sigma = f.value([int(e)]) / np.sqrt(samples) + 1e-9
        assert abs(est[e] - exact) < 4 * sigma + 1e-6


def test_single_marginal_estimate_additive_is_exact() -> None:
    f = AdditiveOracle([1.5, 2.5, 3.5])
    rng = stream_rng(1, 2)
    x = np.array([0.3, 0.6, 0.9])
    got = estimate_marginal_on_point(f, 1, x, 50, rng)
    assert got == pytest.approx(2.5)


def test_residual_oracle_shifts_by_frozen_set() -> None:
    inst = generate_instance("transversal", "coverage", n=8, seed=13)
    base = inst.build_objective()
    frozen = [1, 4]
    res = ResidualOracle(base, frozen)
    offset = base.value(frozen)
    for trial in ([0], [2, 3], [5, 6, 7], []):
        want = base.value(sorted(set(trial) | set(frozen))) - offset
        assert res.value(trial) == pytest.approx(want)


def test_residual_oracle_counts_against_base() -> None:
    base = _tiny_coverage()
    res = ResidualOracle(base, [0])
    start = base.query_count
    res.value([1])
    assert base.query_count == start + 1
    assert res.query_count == base.query_count
