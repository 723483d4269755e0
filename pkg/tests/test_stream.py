import io
import itertools
import math

import numpy as np
import pytest

from conftest import churn_stream, fed, split_feed
from zoo import N, ZOO
from sketchmatch.algebra import PrimeField
from sketchmatch.neighborhood import NESampler
from sketchmatch.pipeline import ParityStore
from sketchmatch.recovery import FqSparseRecovery
from sketchmatch.stream import (BitMeter, SketchMismatch, StreamError, StreamUpdate, edge_index, edge_indices,
                                edge_pair, edge_pairs, feed, format_stream, make_stream, measure, merge,
                                num_pairs, parse_stream, read_stream, sum_meters, write_stream)


@pytest.mark.parametrize("u,v,n,j", [(0, 1, 4, 0), (2, 3, 4, 5), (1, 0, 4, 0)])
def test_edge_index_examples(u, v, n, j):
    assert edge_index(u, v, n) == j


def test_edge_index_lex_bijection():
    for n in (2, 3, 7, 30):
        pairs = list(itertools.combinations(range(n), 2))
        assert [edge_index(u, v, n) for u, v in pairs] == list(range(num_pairs(n)))
        assert [edge_pair(j, n) for j in range(num_pairs(n))] == pairs
        us, vs = edge_pairs(np.arange(num_pairs(n)), n)
        assert list(zip(us.tolist(), vs.tolist())) == pairs
        assert edge_indices(vs, us, n).tolist() == list(range(num_pairs(n)))


def test_edge_index_large_n_roundtrip():
    n = 1 << 16
    rng = np.random.default_rng(0)
    us = rng.integers(0, n - 1, 1000)
    vs = us + 1 + rng.integers(0, n - 1 - us)
    js = edge_indices(us, vs, n)
    assert js.max() < num_pairs(n)
    a, b = edge_pairs(js, n)
    assert np.array_equal(a, us) and np.array_equal(b, vs)


def test_edge_index_errors():
    with pytest.raises(ValueError):
        edge_index(2, 2, 4)
    with pytest.raises(ValueError):
        edge_index(0, 4, 4)
    with pytest.raises(ValueError):
        edge_index(-1, 2, 4)


def test_update_canonical_and_checked():
    assert StreamUpdate.make(5, 2, -1) == StreamUpdate(2, 5, -1)
    with pytest.raises(StreamError):
        StreamUpdate.make(1, 1, 1)
    with pytest.raises(StreamError):
        StreamUpdate.make(1, 2, 2)
    with pytest.raises(StreamError):
        StreamUpdate.make(1, 9, 1, n=9)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_insert_then_delete_restores_state(name):
    s = ZOO[name]()
    before = {k: v.copy() for k, v in s.state().items()}
    feed(s, (3, 7, 1))
    feed(s, (0, 13, 1))
    feed(s, (7, 3, -1))
    feed(s, (13, 0, -1))
    after = s.state()
    assert before.keys() == after.keys()
    assert all(np.array_equal(before[k], after[k]) for k in before)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_order_invariance_and_merge(name, rng):
    factory = ZOO[name]
    for _ in range(3):
        stream = churn_stream(N, 60, 0.4, rng, repeat=0.2)
        base = fed(factory, stream)
        shuffled = fed(factory, stream, rng.permutation(len(stream)))
        assert base.same_state(shuffled)
        left, right = split_feed(factory, stream, int(rng.integers(0, len(stream) + 1)))
        assert merge(left, right).same_state(base)
        assert merge(right, left).same_state(base)
        assert merge(base, factory()).same_state(base)


@pytest.mark.parametrize("name", sorted(ZOO))
def test_same_net_vector_same_state(name, rng):
    factory = ZOO[name]
    stream = churn_stream(N, 40, 0.3, rng)
    net = stream.net_edges()
    direct = make_stream(N, [(u, v, 1) for (u, v), m in net.items() for _ in range(m)])
    assert fed(factory, stream).same_state(fed(factory, direct))


def test_merge_rejects_mismatch():
    with pytest.raises(SketchMismatch):
        merge(NESampler(16, [0], seed=1), NESampler(16, [0], seed=2))
    with pytest.raises(SketchMismatch):
        merge(ParityStore(16), ParityStore(17))
    with pytest.raises(SketchMismatch):
        merge(ParityStore(16), FqSparseRecovery(2, 3, n=16))


def test_merge_leaves_operands_alone():
    a, b = ParityStore(8), ParityStore(8)
    feed(a, (0, 1, 1))
    feed(b, (2, 3, 1))
    m = merge(a, b)
    assert sorted(m.edges()) == [(0, 1), (2, 3)]
    assert a.edges() == [(0, 1)] and b.edges() == [(2, 3)]


def test_measure_examples():
    assert measure(ParityStore(64)) == BitMeter(2016, 0)
    assert PrimeField(127).element_bits == 7
    one = FqSparseRecovery(1, 127, 2)
    assert one.field.Q == 127
    assert one.measure().sketch_bits == 2 * 7   # two syndromes of ceil(log2 127) bits each


def test_ne_sampler_meter_regression():
    # frozen from the first measurement: sketch bits / log2(n)^3 at n = 256
    C_METER = 40322
    m = NESampler(256, [0]).measure()
    assert m.sketch_bits == 20644800
    assert m.sketch_bits <= C_METER * math.log2(256) ** 3


def test_meter_sharing_groups():
    a = BitMeter(10, 5, {"g": 64})
    b = BitMeter(20, 1, {"g": 64, "h": 3})
    s = a + b
    assert (s.sketch_bits, s.randomness_bits, s.total_randomness, s.total) == (30, 6, 73, 103)
    assert a.times(4).as_dict() == {"sketch": 40, "randomness": 84, "total": 124}
    assert sum_meters([a, a, a]).total == 30 + 15 + 64
    with pytest.raises(ValueError):
        a + BitMeter(0, 0, {"g": 65})


def test_parse_format_roundtrip(tmp_path):
    text = "# hello\nn 5\n\n+ 0 1\n+ 3 2\n# mid\n- 1 0\n"
    s = parse_stream(text)
    assert s.n == 5 and len(s) == 3
    assert list(s) == [StreamUpdate(0, 1, 1), StreamUpdate(2, 3, 1), StreamUpdate(0, 1, -1)]
    assert s.comments == ["hello", "mid"]
    assert s.net_edges() == {(2, 3): 1}
    path = tmp_path / "s.txt"
    write_stream(s, path)
    again = read_stream(path)
    assert format_stream(again) == format_stream(s)
    assert parse_stream(io.StringIO(format_stream(s))).net_edges() == s.net_edges()


def test_empty_stream():
    s = parse_stream("n 4\n")
    assert len(s) == 0 and s.net_edges() == {}
    assert ParityStore(4).feed_many(s).recover() == []


@pytest.mark.parametrize("text,line", [
    ("+ 0 1\n", 1),
    ("n x\n", 1),
    ("n 4\n+ 0 0\n", 2),
    ("n 4\n+ 0 4\n", 2),
    ("n 4\n* 0 1\n", 2),
    ("n 4\n+ 0 1\n+ 0\n", 3),
    ("n 4\n+ a 1\n", 2),
    ("n 0\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(StreamError) as err:
        parse_stream(text)
    assert err.value.line == line


def test_parse_missing_header():
    with pytest.raises(StreamError):
        parse_stream("# only a comment\n")


def test_well_formed_check():
    make_stream(4, [(0, 1, 1), (0, 1, -1), (0, 1, 1)]).check_well_formed()
    with pytest.raises(StreamError):
        make_stream(4, [(0, 1, 1), (1, 0, 1)]).check_well_formed()
    with pytest.raises(StreamError):
        make_stream(4, [(0, 1, -1)]).check_well_formed()
