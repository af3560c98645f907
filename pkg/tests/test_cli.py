from __future__ import annotations

import json
import math

import numpy as np
import pytest

from matsub.cli import main
from matsub.core import greedy_basis_value
from matsub.instances import Instance, generate_instance
from matsub.objectives import estimate_marginals_on_point, set_eval_threads
from matsub.oracles import feasibility_verify


def _gen(tmp_path, *extra: str) -> str:
    path = str(tmp_path / "inst.json")
    argv = [
        "gen", "--matroid", "laminar", "--function", "coverage",
        "--n", "9", "--seed", "3", "-o", path,
    ]
    assert main(argv + list(extra)) == 0
    return path


def _run(path: str, out: str, *extra: str) -> None:
    argv = ["run", path, "--epsilon", "0.2", "--seed", "11", "-o", out]
    assert main(argv + list(extra)) == 0


def test_gen_is_byte_deterministic(tmp_path) -> None:
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for target in (a, b):
        assert main([
            "gen", "--matroid", "graphic", "--function", "facility",
            "--n", "12", "--seed", "5", "-o", str(target),
        ]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_rejects_zero_elements(tmp_path) -> None:
    out = str(tmp_path / "x.json")
    assert main([
        "gen", "--matroid", "laminar", "--function", "additive",
        "--n", "0", "--seed", "1", "-o", out,
    ]) == 1


def test_gen_shape_knobs_change_the_instance(tmp_path) -> None:
    flat = tmp_path / "flat.json"
    deep = tmp_path / "deep.json"
    base = [
        "gen", "--matroid", "laminar", "--function", "additive",
        "--n", "16", "--seed", "2",
    ]
    assert main(base + ["--tree-depth", "1", "-o", str(flat)]) == 0
    assert main(base + ["--tree-depth", "6", "-o", str(deep)]) == 0
    assert flat.read_bytes() != deep.read_bytes()
    sparse = tmp_path / "sparse.json"
    assert main([
        "gen", "--matroid", "transversal", "--function", "additive",
        "--n", "16", "--seed", "2", "--degree", "1", "-o", str(sparse),
    ]) == 0
    inst = Instance.from_json(sparse.read_text())
    assert all(len(nbrs) == 1 for nbrs in inst.matroid.adjacency)


def test_generated_greedy_basis_is_feasible(tmp_path) -> None:
    path = _gen(tmp_path)
    inst = Instance.from_json(open(path).read())
    _value, basis = greedy_basis_value(
        inst.build_objective(), range(inst.n), inst.matroid.checker
    )
    assert feasibility_verify(inst.matroid, basis)


def test_run_records_are_deterministic_up_to_wall_time(tmp_path) -> None:
    path = _gen(tmp_path)
    records = []
    for name in ("r1.json", "r2.json"):
        out = str(tmp_path / name)
        _run(path, out)
        record = json.loads(open(out).read())
        record.pop("wall_time_s")
        records.append(record)
    assert records[0] == records[1]


def test_run_baselines_bracket_the_pipeline(tmp_path) -> None:
    path = _gen(tmp_path)
    values = {}
    for algo in ("full", "greedy", "brute"):
        out = str(tmp_path / f"{algo}.json")
        _run(path, out, "--algorithm", algo)
        values[algo] = json.loads(open(out).read())["value"]
    assert values["greedy"] >= 0.5 * values["brute"] - 1e-9
    assert values["full"] >= (1 - 1 / math.e - 0.2) * values["brute"] - 1e-9
    assert values["full"] <= values["brute"] + 1e-9


def test_run_rejects_out_of_range_epsilon(tmp_path) -> None:
    path = _gen(tmp_path)
    out = str(tmp_path / "r.json")
    assert main(["run", path, "--epsilon", "0.5", "-o", out]) == 2


def test_run_missing_instance_is_usage_error(tmp_path) -> None:
    out = str(tmp_path / "r.json")
    assert main(["run", str(tmp_path / "absent.json"), "-o", out]) == 2


def test_verify_accepts_untouched_and_rejects_tampered(tmp_path, capsys) -> None:
    path = _gen(tmp_path)
    out = str(tmp_path / "res.json")
    _run(path, out)
    assert main(["verify", path, out]) == 0
    capsys.readouterr()
    record = json.loads(open(out).read())
    record["solution"] = list(range(9))  # over capacity for sure
    bad = str(tmp_path / "bad.json")
    with open(bad, "w") as handle:
        json.dump(record, handle)
    assert main(["verify", path, bad]) == 1
    text = capsys.readouterr().out
    assert "feasibility: FAIL" in text or "value: FAIL" in text


def test_verify_flags_counter_overruns(tmp_path, capsys) -> None:
    path = _gen(tmp_path)
    out = str(tmp_path / "res.json")
    _run(path, out)
    record = json.loads(open(out).read())
    record["counters"]["phase2_f_queries"] = 10**12
    bad = str(tmp_path / "bad.json")
    with open(bad, "w") as handle:
        json.dump(record, handle)
    assert main(["verify", path, bad]) == 1
    assert "phase-2 query budget: FAIL" in capsys.readouterr().out


def test_run_with_threads_still_verifies(tmp_path) -> None:
    path = _gen(tmp_path)
    out = str(tmp_path / "res.json")
    _run(path, out, "--threads", "2")
    assert main(["verify", path, out]) == 0


def test_threaded_estimates_match_serial() -> None:
    inst = generate_instance("laminar", "coverage", n=12, seed=9)
    x = np.full(12, 0.4)
    serial = estimate_marginals_on_point(
        inst.build_objective(), x, list(range(12)), 64, np.random.default_rng(1)
    )
    set_eval_threads(3)
    try:
        fanned = estimate_marginals_on_point(
            inst.build_objective(), x, list(range(12)), 64, np.random.default_rng(1)
        )
    finally:
        set_eval_threads(1)
    assert np.allclose(serial, fanned, atol=1e-12)


def test_bench_compares_backends(capsys) -> None:
    assert main(["bench", "--function", "facility", "--n", "24",
                 "--rows", "64", "--repeats", "2"]) == 0
    text = capsys.readouterr().out
    assert "numpy" in text
    assert "marginal_means" in text


def test_usage_errors_exit_two() -> None:
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
