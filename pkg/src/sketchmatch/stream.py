"""Dynamic edge streams, the linear-sketch contract and bit accounting."""

from __future__ import annotations

import copy
import io
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np


class StreamError(ValueError):
    """Malformed stream input, carrying the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class SketchMismatch(ValueError):
    pass


class StreamUpdate(NamedTuple):
    u: int
    v: int
    delta: int

    @classmethod
    def make(cls, u: int, v: int, delta: int, n: int | None = None) -> "StreamUpdate":
        if u == v:
            raise StreamError(f"self-loop on vertex {u}")
        if delta not in (-1, 1):
            raise StreamError(f"delta must be +1 or -1, got {delta}")
        if u < 0 or v < 0 or (n is not None and max(u, v) >= n):
            raise StreamError(f"edge ({u}, {v}) outside [0, {n})")
        return cls(min(u, v), max(u, v), delta)


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(u: int, v: int, n: int) -> int:
    if u == v:
        raise ValueError("edge_index of a self-loop")
    if not (0 <= u < n and 0 <= v < n):
        raise ValueError(f"vertex out of range for n={n}")
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def edge_indices(us: np.ndarray, vs: np.ndarray, n: int) -> np.ndarray:
    a = np.minimum(us, vs).astype(np.int64)
    b = np.maximum(us, vs).astype(np.int64)
    return a * n - a * (a + 1) // 2 + (b - a - 1)


def edge_pairs(js: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of edge_indices."""
    js = np.asarray(js, dtype=np.int64)
    rows = np.arange(n, dtype=np.int64)
    starts = rows * n - rows * (rows + 1) // 2
    u = np.searchsorted(starts, js, side="right") - 1
    v = js - starts[u] + u + 1
    return u, v


def edge_pair(j: int, n: int) -> tuple[int, int]:
    if not 0 <= j < num_pairs(n):
        raise ValueError(f"edge index {j} out of range for n={n}")
    u, v = edge_pairs(np.array([j]), n)
    return int(u[0]), int(v[0])


# --------------------------------------------------------------------------
# bit accounting


@dataclass
class BitMeter:
    """Bits of stream-dependent state plus stored randomness.

    ``shared`` maps a sharing-group key to the randomness bits of that group;
    adding meters keeps one entry per key, so shared seeds are charged once.
    """

    sketch_bits: int = 0
    randomness_bits: int = 0
    shared: dict[str, int] = field(default_factory=dict)

    def __add__(self, other: "BitMeter") -> "BitMeter":
        shared = dict(self.shared)
        for key, bits in other.shared.items():
            if key in shared and shared[key] != bits:
                raise ValueError(f"sharing group {key} charged inconsistently")
            shared[key] = bits
        return BitMeter(self.sketch_bits + other.sketch_bits,
                        self.randomness_bits + other.randomness_bits, shared)

    def times(self, copies: int) -> "BitMeter":
        """Meter of ``copies`` sketches that differ only in private state."""
        return BitMeter(self.sketch_bits * copies, self.randomness_bits * copies, dict(self.shared))

    @property
    def total_randomness(self) -> int:
        return self.randomness_bits + sum(self.shared.values())

    @property
    def total(self) -> int:
        return self.sketch_bits + self.total_randomness

    def as_dict(self) -> dict[str, int]:
        return {"sketch": self.sketch_bits, "randomness": self.total_randomness, "total": self.total}


def sum_meters(meters: Iterable[BitMeter]) -> BitMeter:
    out = BitMeter()
    for m in meters:
        out = out + m
    return out


# --------------------------------------------------------------------------
# the linear-sketch contract


class LinearSketch(ABC):
    """A sketch Φ·x of the edge vector, maintained under signed updates.

    Subclasses implement ``feed_arrays`` (a batch of canonical updates),
    ``_add_state`` (coordinate-wise addition of a compatible sketch's state),
    ``state`` (canonical arrays for bit-exact comparison) and ``measure``.
    """

    n: int

    @property
    @abstractmethod
    def params(self) -> tuple:
        """Everything, seeds included, that fixes the sketching matrix."""

    @abstractmethod
    def feed_arrays(self, us: np.ndarray, vs: np.ndarray, ds: np.ndarray) -> None: ...

    @abstractmethod
    def _add_state(self, other: "LinearSketch") -> None: ...

    @abstractmethod
    def state(self) -> dict[str, np.ndarray]: ...

    @abstractmethod
    def measure(self) -> BitMeter: ...

    def feed(self, update: StreamUpdate | tuple[int, int, int]) -> "LinearSketch":
        u, v, d = update
        upd = StreamUpdate.make(u, v, d, self.n)
        self.feed_arrays(np.array([upd.u], dtype=np.int64), np.array([upd.v], dtype=np.int64),
                         np.array([upd.delta], dtype=np.int64))
        return self

    def feed_many(self, updates: Iterable[StreamUpdate | tuple[int, int, int]]) -> "LinearSketch":
        us, vs, ds = updates_to_arrays(updates, self.n)
        if us.size:
            self.feed_arrays(us, vs, ds)
        return self

    def copy(self):
        return copy.deepcopy(self)

    def check_compatible(self, other: "LinearSketch") -> None:
        if type(self) is not type(other) or self.params != other.params:
            raise SketchMismatch(f"cannot merge {type(self).__name__} sketches with different parameters or seeds")

    def merge(self, other: "LinearSketch"):
        self.check_compatible(other)
        out = self.copy()
        out._add_state(other)
        return out

    def same_state(self, other: "LinearSketch") -> bool:
        return states_equal(self.state(), other.state())


def states_equal(a: dict[str, np.ndarray], b: dict[str, np.ndarray]) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def feed(sketch: LinearSketch, update: StreamUpdate | tuple[int, int, int]) -> LinearSketch:
    return sketch.feed(update)


def merge(s1: LinearSketch, s2: LinearSketch) -> LinearSketch:
    return s1.merge(s2)


def measure(sketch: LinearSketch) -> BitMeter:
    return sketch.measure()


def orient(us: np.ndarray, vs: np.ndarray, in_s: np.ndarray):
    """Split edges crossing S into (endpoint in S, endpoint outside S) and a selector."""
    su, sv = in_s[us], in_s[vs]
    keep = su != sv
    inner = np.where(su, us, vs)[keep]
    outer = np.where(su, vs, us)[keep]
    return inner, outer, keep


def vertex_mask(n: int, vertices: Iterable[int] | np.ndarray) -> np.ndarray:
    mask = np.zeros(n, dtype=np.bool_)
    arr = np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices)
    if arr.dtype == np.bool_:
        if arr.shape != (n,):
            raise ValueError("boolean vertex mask has the wrong length")
        return arr.copy()
    if arr.size:
        arr = arr.astype(np.int64)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("vertex id out of range")
        mask[arr] = True
    return mask


# --------------------------------------------------------------------------
# stream files


@dataclass
class Stream:
    n: int
    us: np.ndarray
    vs: np.ndarray
    ds: np.ndarray
    comments: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.us.size)

    def __iter__(self) -> Iterator[StreamUpdate]:
        for u, v, d in zip(self.us.tolist(), self.vs.tolist(), self.ds.tolist()):
            yield StreamUpdate(u, v, d)

    def chunks(self, size: int = 1 << 14):
        for lo in range(0, len(self), size):
            yield self.us[lo:lo + size], self.vs[lo:lo + size], self.ds[lo:lo + size]

    def net_edges(self) -> dict[tuple[int, int], int]:
        """Net multiplicity of every edge with a nonzero total."""
        js = edge_indices(self.us, self.vs, self.n)
        uniq, inv = np.unique(js, return_inverse=True)
        tot = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(tot, inv, self.ds)
        nz = tot != 0
        u, v = edge_pairs(uniq[nz], self.n)
        return {(int(a), int(b)): int(m) for a, b, m in zip(u, v, tot[nz])}

    def check_well_formed(self) -> None:
        """Raises StreamError if any edge multiplicity leaves {0, 1} mid-stream."""
        mult: dict[int, int] = {}
        js = edge_indices(self.us, self.vs, self.n).tolist()
        for pos, (j, d) in enumerate(zip(js, self.ds.tolist())):
            m = mult.get(j, 0) + d
            if m not in (0, 1):
                raise StreamError(f"update {pos} drives an edge multiplicity to {m}")
            mult[j] = m


def updates_to_arrays(updates, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = [StreamUpdate.make(u, v, d, n) for u, v, d in updates]
    if not rows:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), e.copy()
    arr = np.array(rows, dtype=np.int64)
    return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


def make_stream(n: int, updates, comments: list[str] | None = None) -> Stream:
    us, vs, ds = updates_to_arrays(updates, n)
    return Stream(n, us, vs, ds, list(comments or []))


def parse_stream(text: str | TextIO) -> Stream:
    fh = io.StringIO(text) if isinstance(text, str) else text
    n = None
    rows: list[tuple[int, int, int]] = []
    comments: list[str] = []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise StreamError("expected header 'n <vertices>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise StreamError(f"bad vertex count {parts[1]!r}", lineno) from None
            if n < 1:
                raise StreamError("vertex count must be positive", lineno)
            continue
        if len(parts) != 3 or parts[0] not in "+-" or len(parts[0]) != 1:
            raise StreamError(f"expected '+ u v' or '- u v', got {line!r}", lineno)
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise StreamError(f"bad vertex id in {line!r}", lineno) from None
        try:
            upd = StreamUpdate.make(u, v, 1 if parts[0] == "+" else -1, n)
        except StreamError as exc:
            raise StreamError(str(exc), lineno) from None
        rows.append(upd)
    if n is None:
        raise StreamError("missing header 'n <vertices>'")
    return make_stream(n, rows, comments)


def read_stream(path: str | os.PathLike) -> Stream:
    with open(path, encoding="utf-8") as fh:
        return parse_stream(fh)


def format_stream(stream: Stream) -> str:
    out = [f"# {c}" for c in stream.comments]
    out.append(f"n {stream.n}")
    sign = {1: "+", -1: "-"}
    out.extend(f"{sign[d]} {u} {v}" for u, v, d in zip(stream.us.tolist(), stream.vs.tolist(), stream.ds.tolist()))
    return "\n".join(out) + "\n"


def write_stream(stream: Stream, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_stream(stream))
