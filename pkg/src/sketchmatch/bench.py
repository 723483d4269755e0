"""Run the pipeline on a stream, attach ground truth, and verify reports."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .instances import planted_mu
from .matching import matching_oracle, validate_matching
from .pipeline import PipelineConfig, run_pipeline
from .stream import Stream


def ground_truth(stream: Stream) -> dict:
    edges = sorted(stream.net_edges())
    oracle = matching_oracle(edges)
    return {"lower": oracle.lower, "upper": oracle.upper, "method": oracle.method,
            "planted": planted_mu(stream), "edges": len(edges)}


def _ratio(size: int, mu: dict) -> float | list[float] | None:
    if mu["lower"] == mu["upper"]:
        return size / mu["lower"] if mu["lower"] else None
    if mu["planted"]:
        return size / mu["planted"]
    if mu["lower"]:
        return [size / mu["upper"], size / mu["lower"]]
    return None


def run(stream: Stream, cfg: PipelineConfig, *, timing: bool = False) -> dict:
    """RunReport: the pipeline's report plus instance truth, approximation ratio and harness validation.

    Wall time is included only on request so that reports stay byte-identical across runs.
    """
    start = time.perf_counter()
    report = run_pipeline(stream, cfg).as_dict()
    elapsed = time.perf_counter() - start
    edges = list(stream.net_edges())
    verdict = validate_matching([tuple(e) for e in report["matching"]], edges)
    mu = ground_truth(stream)
    report["validation"] = verdict.as_dict()
    report["instance"] = {"n": stream.n, "updates": len(stream), "mu": mu}
    report["ratio"] = _ratio(len(report["matching"]), mu)
    report["config"] = cfg.as_dict()
    if timing:
        report["wall_time_s"] = round(elapsed, 3)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


@dataclass
class VerifyResult:
    passed: bool
    problems: list[str] = field(default_factory=list)
    ratio: float | list[float] | None = None

    def as_dict(self) -> dict:
        return {"passed": self.passed, "problems": self.problems, "ratio": self.ratio}


def verify(stream: Stream, report: dict) -> VerifyResult:
    """Checks the reported matching against the stream's net graph and recomputes the ratio."""
    problems = []
    try:
        M = [(int(u), int(v)) for u, v in report["matching"]]
    except (KeyError, TypeError, ValueError):
        return VerifyResult(False, ["report has no well-formed 'matching' list"])
    if report.get("schema") != 1:
        problems.append(f"unsupported schema {report.get('schema')!r}")
    verdict = validate_matching(M, stream.net_edges())
    for w in verdict.repeated_vertices:
        problems.append(f"vertex {w} is matched more than once")
    for u, v in verdict.fabricated:
        problems.append(f"edge ({u}, {v}) is not in the graph")
    ratio = _ratio(len(M), ground_truth(stream))
    claimed = report.get("ratio")
    if claimed is not None and claimed != ratio:
        problems.append(f"reported ratio {claimed} differs from recomputed {ratio}")
    return VerifyResult(not problems, problems, ratio)
