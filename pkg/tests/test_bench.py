import copy
import json
from decimal import Decimal
from importlib import resources
from pathlib import Path

import pytest

from slspec.bench import (
    BenchReport,
    Distribution,
    Manifest,
    compute_distribution,
    load_manifest,
    manifest_from_dict,
    percentage,
    render_distribution_markdown,
    render_report,
    run_benchmark,
    validate_record,
    write_report,
)
from slspec.errors import DuplicateId, IOFailure, SchemaError
from slspec.oracle import Cassette, ReplayBackend
from slspec.pipeline import PipelineConfig

SAMPLES = Path(str(resources.files("slspec").joinpath("data", "samples")))


@pytest.fixture(scope="module")
def sample():
    return load_manifest(SAMPLES / "manifest.json")


def record(**kw):
    base = {
        "id": "1",
        "title": "Two",
        "difficulty": "Easy",
        "description": "d",
        "signature": "int add(int a, int b)",
        "examples": [{"input": "a = 1, b = 2", "output": "3"}],
        "data_structures": ["integer"],
    }
    base.update(kw)
    return base


def test_sample_manifest(sample):
    assert sample.dataset == "sample-12" and len(sample.problems) == 12
    assert sample.get("701").title.startswith("Insert into a Binary Search Tree")
    d = compute_distribution(sample)
    assert dict(d.difficulty) == {"Easy": 6, "Medium": 4, "Hard": 2}


def test_record_validation():
    assert validate_record(record(id=7)).id == "7"
    for bad in [
        {k: v for k, v in record().items() if k != "title"},
        record(difficulty="Trivial"),
        record(examples=[]),
        record(examples=[{"input": "a = 1"}]),
        record(signature="double f(double x)"),
        record(signature="void f(int a)"),
        record(data_structures=["array"]),
        record(signature="int* twoSum(int* nums, int numsSize, int target, int* returnSize)",
               data_structures=["array", "integer"]),
    ]:
        with pytest.raises(SchemaError):
            validate_record(bad)


def test_duplicate_ids():
    with pytest.raises(DuplicateId):
        manifest_from_dict({"dataset": "x", "problems": [record(), record()]})


def test_load_errors(tmp_path):
    with pytest.raises(IOFailure):
        load_manifest(tmp_path / "nope.json")
    p = tmp_path / "bad.json"
    p.write_text("[")
    with pytest.raises(SchemaError):
        load_manifest(p)
    p.write_text(json.dumps({"problems": "x"}))
    with pytest.raises(SchemaError):
        load_manifest(p)


def test_manifest_round_trip(sample):
    assert manifest_from_dict(json.loads(json.dumps(sample.to_dict()))) == sample


@pytest.mark.parametrize(
    "count,total,want",
    [(62, 200, "31.0"), (97, 200, "48.5"), (1, 3, "33.3"), (2, 3, "66.7"), (1, 8, "12.5"), (0, 5, "0.0"), (0, 0, "0.0")],
)
def test_percentage_rounds_half_up(count, total, want):
    assert percentage(count, total) == Decimal(want)


def test_distribution_rendering(sample):
    d = compute_distribution(sample)
    md = render_distribution_markdown(d)
    assert "| Easy | 6 | 50.0 |" in md
    assert md.index("**Difficulty**") < md.index("**Data Structure**")
    assert Distribution.from_dict(d.to_dict()) == d


def test_empty_manifest():
    m = Manifest("empty", ())
    d = compute_distribution(m)
    assert d.size == 0 and all(p == Decimal("0.0") for _, p in d.percentages("difficulty"))
    r = run_benchmark(m, PipelineConfig(), ReplayBackend(Cassette()))
    assert r.metrics()["problems"] == 0


def _replay(sample, tmp_path, parallelism):
    cassette = Cassette.load(SAMPLES / "cassette.json")
    return run_benchmark(sample, PipelineConfig(), ReplayBackend(cassette), parallelism, tmp_path)


def test_replay_matches_expected_outcomes(sample, tmp_path):
    want = json.loads((SAMPLES / "expected_outcomes.json").read_text())
    report = _replay(sample, tmp_path / "ws", 1)
    got = {r.problem_id: {"outcome": r.outcome, "oracle_calls": r.oracle_calls} for r in report.results}
    assert got == want
    m = report.metrics()
    assert m["accepted"] == 8 and m["failed"] == 4 and m["problems_with_refutation"] >= 2


def test_parallelism_does_not_change_results(sample, tmp_path):
    a = _replay(sample, tmp_path / "a", 1)
    b = _replay(sample, tmp_path / "b", 4)
    strip = lambda r: [dict(x.to_dict(), workspace=None) for x in r.results]  # noqa: E731
    assert strip(a) == strip(b)
    assert a.metrics() == b.metrics()


def test_report_outputs(sample, tmp_path):
    report = _replay(sample, tmp_path / "ws", 2)
    doc = json.loads(render_report(report, "json"))
    assert BenchReport.from_dict(doc).metrics() == report.metrics()
    md = render_report(report, "markdown")
    assert "| 701 |" in md and "Accepted" in md
    paths = write_report(report, tmp_path / "out")
    assert paths.json_path.exists() and paths.markdown_path.exists()
    with pytest.raises(ValueError):
        render_report(report, "xml")


def test_internal_errors_are_contained(sample, tmp_path):
    class Exploding:
        calls = 0

        def complete(self, pb):
            raise RuntimeError("boom")

    m = Manifest("one", (sample.problems[0],))
    r = run_benchmark(m, PipelineConfig(), Exploding(), 1, tmp_path)
    assert r.results[0].status == "Failed" and r.results[0].reason.startswith("InternalError")


def test_manifest_is_not_mutated(sample):
    before = copy.deepcopy(sample.to_dict())
    compute_distribution(sample)
    assert sample.to_dict() == before


from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(["Easy", "Medium", "Hard"]), min_size=1, max_size=400))
def test_difficulty_percentages_sum_to_100(diffs):
    problems = [validate_record(record(id=str(i), difficulty=d)) for i, d in enumerate(diffs)]
    d = compute_distribution(Manifest("x", tuple(problems)))
    pcts = [p for _, p in d.percentages("difficulty")]
    assert abs(sum(pcts) - Decimal(100)) <= Decimal("0.1")
    for (_, count), p in zip(d.difficulty, pcts):
        assert abs(Decimal(100) * count / len(diffs) - p) <= Decimal("0.05")


def test_runs_are_isolated(sample, tmp_path):
    report = _replay(sample, tmp_path / "ws", 4)
    roots = [Path(r.workspace) for r in report.results]
    assert len(set(roots)) == len(roots)
    for a in roots:
        for b in roots:
            if a != b:
                assert not str(a).startswith(str(b) + "/")
    # every run's manifest only lists files inside its own directory
    for r in report.results:
        m = json.loads((Path(r.workspace) / "manifest.json").read_text())
        assert m["problem_id"] == r.problem_id
        for art in m["artifacts"]:
            assert (Path(r.workspace) / art["path"]).is_file()


def test_replay_uses_no_network(sample, tmp_path, monkeypatch):
    import socket

    import httpx

    def refuse(*a, **k):
        raise AssertionError("network access during replay")

    monkeypatch.setattr(socket, "socket", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(httpx, "post", refuse)
    monkeypatch.setattr(httpx.Client, "send", refuse)
    report = _replay(sample, tmp_path, 2)
    assert report.metrics()["problems"] == 12
    assert not hasattr(ReplayBackend(Cassette()), "endpoint")
