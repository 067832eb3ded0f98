#!/usr/bin/env python3
"""Replay a benchmark from a cassette and compare against expected outcomes.

Runs every problem of a manifest through the full pipeline with the oracle
served from recorded answers only, writes the batch report, and prints one
line per problem plus the aggregate metrics.  With the bundled sample data:

    python3 scripts/replay_benchmark.py --workspace /tmp/slspec-replay

Exit status is 1 when an outcome or oracle-call count differs from the
expected-outcomes file.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from slspec.bench import load_manifest, run_benchmark, write_report
from slspec.oracle import Cassette, ReplayBackend
from slspec.pipeline import PipelineConfig

SAMPLES = Path(__file__).resolve().parent.parent / "src" / "slspec" / "data" / "samples"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--manifest", type=Path, default=SAMPLES / "manifest.json")
    ap.add_argument("--cassette", type=Path, default=SAMPLES / "cassette.json")
    ap.add_argument("--expected", type=Path, default=SAMPLES / "expected_outcomes.json")
    ap.add_argument("--workspace", type=Path, default=None)
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args(argv)

    root = args.workspace or Path(tempfile.mkdtemp(prefix="slspec-replay-"))
    manifest = load_manifest(args.manifest)
    backend = ReplayBackend(Cassette.load(args.cassette))
    report = run_benchmark(manifest, PipelineConfig(), backend, parallelism=args.parallelism, root=root)
    paths = write_report(report, root / "bench")

    expected = json.loads(args.expected.read_text()) if args.expected.exists() else {}
    bad = 0
    for r in report.results:
        outcome = r.status if not r.reason else f"{r.status}({r.reason})"
        want = expected.get(r.problem_id)
        mark = ""
        if want is not None and (want["outcome"], want["oracle_calls"]) != (outcome, r.oracle_calls):
            mark = f"  != expected {want['outcome']} / {want['oracle_calls']} calls"
            bad += 1
        print(f"{r.problem_id:>6}  {outcome:<36} calls={r.oracle_calls:<3}{mark}")
    print(json.dumps(report.metrics(), indent=2, sort_keys=True))
    print(f"report: {paths.json_path}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
