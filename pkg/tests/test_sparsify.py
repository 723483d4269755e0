import itertools

import numpy as np
import pytest

from sketchmatch.instances import net_edge_list, planted_matching
from sketchmatch.matching import validate_matching
from sketchmatch.sparsify import (AmplifiedSparsify, PromiseRegimeUnreachable, RegularGraph, SparsifyParams,
                                  SparsifySketch, regular_graph, sparsify_build, sparsify_parameters,
                                  sparsify_recover)
from sketchmatch.stream import make_stream

PLANT = SparsifyParams(n=64, k=8, d=2, a=32, b_tilde=2, c=3, hash_k=36)


@pytest.mark.parametrize("k,d,nbrs0", [(6, 2, [1, 5]), (6, 3, [1, 3, 5]), (8, 4, [1, 2, 6, 7])])
def test_regular_graph_examples(k, d, nbrs0):
    F = regular_graph(k, d)
    assert F.neighbors(0) == nbrs0
    degrees = [len(F.neighbors(i)) for i in range(k)]
    assert degrees == [d] * k
    if (k, d) == (8, 4):
        assert sum(degrees) == 32


@pytest.mark.parametrize("k,d", [(k, d) for k in range(2, 21) for d in range(k) if not (d % 2 and k % 2)])
def test_regular_graph_properties(k, d):
    F = RegularGraph(k, d)
    for i, j in itertools.product(range(k), repeat=2):
        assert F(i, j) == F(j, i)
        assert F(i, j) == (j in F.neighbors(i))
    assert not any(F(i, i) for i in range(k))
    assert all(len(set(F.neighbors(i))) == d for i in range(k))


def test_regular_graph_errors():
    with pytest.raises(ValueError):
        RegularGraph(5, 3)
    with pytest.raises(ValueError):
        RegularGraph(4, 4)


def test_parameter_example():
    p = sparsify_parameters(4096, 2048, 4, 0.5)
    assert (p.k, p.d, p.a, p.b_tilde, p.c) == (5120, 1280, 256, 3, 60)
    assert p.hash_k == 144
    with pytest.raises(PromiseRegimeUnreachable):
        p.check_regime()
    with pytest.raises(PromiseRegimeUnreachable):
        sparsify_build(4096, 2048, 4)
    assert sparsify_parameters(1000, 7, 3).k % 2 == 0


def test_parameter_errors():
    with pytest.raises(ValueError):
        sparsify_parameters(64, 0, 2)
    with pytest.raises(ValueError):
        sparsify_parameters(64, 8, 2, delta=0.7)


def test_reachable_regime_builds():
    # a huge opt relative to alpha makes a = 2opt/alpha^2 clear 200 b~
    s = sparsify_build(64, 1600, 2, 0.5)
    assert s.p.a >= 200 * s.p.b_tilde


def test_routes_follow_membership():
    s = SparsifySketch(PLANT, seed=1, tester_scale=0.1)
    for u, v in itertools.combinations(range(0, 64, 3), 2):
        want = [i for i in range(PLANT.k)
                if (s.member[i, u] and not s.member[i, v] and any(s.member[j, v] for j in s.F.neighbors(i)))
                or (s.member[i, v] and not s.member[i, u] and any(s.member[j, u] for j in s.F.neighbors(i)))]
        assert s.routes(u, v) == want


def test_fanout_touches_only_routed_groups():
    s = SparsifySketch(PLANT, seed=1, tester_scale=0.1)
    lonely = [v for v in range(64) if not s.member[:, v].any() and not s.reach[:, v].any()]
    if lonely:
        s.feed_many([(lonely[0], (lonely[0] + 1) % 64, 1)])
        assert not s.state()
    u, v = _planted_pair(s)
    s.feed_many([(u, v, 1)])
    touched = {int(k.split("/")[0]) for k in s.state()}
    assert touched == set(s.routes(u, v))


def _planted_pair(s):
    """u, v each in exactly one group, the two groups adjacent in F."""
    once = s.member.sum(axis=0) == 1
    home = s.member.argmax(axis=0)
    for u, v in itertools.combinations(np.flatnonzero(once).tolist(), 2):
        if s.F(home[u], home[v]):
            return u, v
    raise AssertionError("no planted pair for this seed")


def test_planted_edge_is_recovered():
    found = 0
    for seed in range(10):
        s = SparsifySketch(PLANT, seed=seed, tester_scale=0.1)
        u, v = _planted_pair(s)
        s.feed_many([(u, v, 1)])
        r = s.recover([])
        assert (min(u, v), max(u, v)) in r.recovered_edges
        assert r.matching == [(min(u, v), max(u, v))]
        found += 1
    assert found == 10


def test_all_groups_removed():
    s = SparsifySketch(PLANT, seed=2, tester_scale=0.1)
    st = planted_matching(64, 16, seed=2)
    s.feed_many(st)
    everyone = [(2 * i, 2 * i + 1) for i in range(32)]
    r = s.recover(everyone)
    assert r.matching == [] and r.survivors == 0
    assert r.removed_easy == len(s.testers)


def test_output_edges_exist(rng):
    for seed in range(12):
        st = planted_matching(64, 16, distractors=10, deletion_fraction=0.3, seed=seed)
        s = SparsifySketch(PLANT, seed=seed, tester_scale=0.1)
        s.feed_many(st)
        M = sparsify_recover(s, [])
        assert validate_matching(M, net_edge_list(st)).valid


def test_amplified_copy_zero_matches_single():
    st = make_stream(64, [(1, 2, 1), (5, 9, 1), (9, 30, 1)])
    amp = AmplifiedSparsify(PLANT, 3, seed=4, tester_scale=0.1)
    one = SparsifySketch(PLANT, seed=4, tester_scale=0.1)
    amp.feed_many(st)
    one.feed_many(st)
    assert amp.copies[0].same_state(one)
    assert len(amp.recover([]).matching) >= len(one.recover([]).matching)
    assert AmplifiedSparsify.default_copies(0.5) == 120
    with pytest.raises(ValueError):
        AmplifiedSparsify(PLANT, 0)


def test_amplification_does_not_hurt():
    """Success rate of the best-of-copies wrapper is at least the single sketch's."""
    single = amplified = 0
    for seed in range(8):
        s = SparsifySketch(PLANT, seed=seed, tester_scale=0.1)
        u, v = _planted_pair(s)
        st = make_stream(64, [(u, v, 1)])
        s.feed_many(st)
        a = AmplifiedSparsify(PLANT, 3, seed=seed, tester_scale=0.1)
        a.feed_many(st)
        single += bool(s.recover([]).matching)
        amplified += bool(a.recover([]).matching)
    assert amplified >= single


def test_meter_charges_snr_seed_once():
    s = SparsifySketch(PLANT, seed=1, tester_scale=0.1)
    m = s.measure()
    snr_groups = [k for k in m.shared if k.startswith("snr:")]
    assert len(snr_groups) == 1
    assert m.sketch_bits % PLANT.k == 0
