from __future__ import annotations

import numpy as np
import pytest

from sketchmatch.stream import Stream, make_stream


def churn_stream(n: int, inserts: int, deletions: float, rng: np.random.Generator,
                 repeat: float = 0.0) -> Stream:
    """Random multigraph stream: ``inserts`` insertions, a ``deletions`` share of them later deleted.

    With ``repeat`` > 0 some pairs are inserted more than once, so multiplicities
    above one occur.
    """
    rows = []
    live = []
    for _ in range(inserts):
        if live and rng.random() < repeat:
            u, v = live[rng.integers(len(live))]
        else:
            u, v = rng.choice(n, 2, replace=False).tolist()
        rows.append((u, v, 1))
        live.append((u, v))
    for pos in rng.choice(len(live), int(deletions * len(live)), replace=False).tolist():
        rows.insert(int(rng.integers(pos + 1, len(rows) + 1)), (*live[pos], -1))
    return make_stream(n, rows)


def split_feed(factory, stream: Stream, cut: int):
    left, right = factory(), factory()
    us, vs, ds = stream.us, stream.vs, stream.ds
    if cut:
        left.feed_arrays(us[:cut], vs[:cut], ds[:cut])
    if cut < len(stream):
        right.feed_arrays(us[cut:], vs[cut:], ds[cut:])
    return left, right


def fed(factory, stream: Stream, order=None):
    s = factory()
    idx = np.arange(len(stream)) if order is None else order
    if idx.size:
        s.feed_arrays(stream.us[idx], stream.vs[idx], stream.ds[idx])
    return s


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the run summary, then assert on it."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(tag: str, ok: bool, detail: str) -> None:
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
