import itertools
import math

import numpy as np
import pytest

from sketchmatch.recovery import L0Bank
from sketchmatch.snr import (ExhaustiveSNR, NoCandidate, RecoveryFailed, SNRecoverySketch, WorkBoundExceeded,
                             exhaustive_snr_recover, index_recover, snr_recover, snr_schedule)

# frozen from the first calibration run at n=4096, a=2048, b=20, c=4
C_SNR = 166.216
C_RAND = 301.5


def promise_instance(rng, n, a, b, c, fill=0.5):
    """x supported on a random T of size a (density ``fill``) plus b random coordinates outside it."""
    perm = rng.permutation(n)
    T, out = perm[:a], perm[a:a + b]
    inside = T[rng.random(a) < fill]
    supp = np.concatenate([inside, out])
    vals = rng.integers(1, c + 1, supp.size)
    return T, supp, vals, frozenset(out.tolist())


@pytest.mark.parametrize("n,a,b", [(4096, 2048, 20), (4096, 640, 1), (1 << 16, 10 ** 6, 3), (64, 10, 1),
                                   (4096, 400, 4), (1024, 1e5, 0.5)])
def test_schedule_invariants(n, a, b):
    s = snr_schedule(n, a, b)
    cap = math.ceil(math.log2(math.log2(n)))
    assert s.depth <= cap
    for lv in s.levels:
        assert lv.a == a / 4 ** (lv.j - 1)
        assert lv.gamma == (1 / 24) / 2 ** (lv.j - 1)
        assert lv.a >= 100 * lv.b
        assert lv.b <= math.e ** 2 * b
    bs = [b]
    for lv in s.levels:
        bs.append(lv.b + 12 * (lv.gamma * lv.b + lv.b ** 2 / lv.a))
    assert [lv.b for lv in s.levels] == bs[:s.depth]
    if s.depth:
        last = s.levels[-1]
        nxt_a, nxt_b = last.a / 4, bs[s.depth]
        assert s.depth == cap or nxt_a < 100 * nxt_b
        assert s.final_sparsity == math.ceil(last.a + last.b)
    else:
        assert s.final_sparsity == math.ceil(a + b)


def test_schedule_examples():
    s = snr_schedule(4096, 640, 1)
    assert [(lv.a, lv.gamma) for lv in s.levels] == [(640.0, 1 / 24), (160.0, 1 / 48)]
    assert s.levels[1].b == pytest.approx(1 + 12 * (1 / 24 + 1 / 640))
    assert s.final_sparsity == 162
    assert snr_schedule(4096, 12, 2).depth == 0
    assert snr_schedule(1 << 16, 10 ** 7, 1, max_levels=2).depth == 2
    with pytest.raises(ValueError):
        snr_schedule(64, 0, 1)


def test_level_shapes():
    s = SNRecoverySketch(4096, 640, 1, 3)
    lv = s.levels[0]
    assert lv.z.shape == (math.ceil(5 * 640 * math.log(8)),)
    assert lv.zs.shape == (lv.z.size, math.ceil(math.log2(24)), 2)
    assert s.q == 5 and s.domain == 4096 + 640


def test_index_recover_reads_T_coordinates():
    s = SNRecoverySketch(64, 100, 1, 3, seed=2)
    s.update([5, 20, 21], [2, 1, 2])
    T = [20, 21, 30]
    got = [index_recover(s.levels[0], 64, T, inner=i) for i in range(s.levels[0].z.size)]
    found = {g for g in got if g is not None}
    # coordinate 30 is in T with value 0; the outside entry 5 is never reported
    assert found == {(20, 1), (21, 2), (30, 0)}
    assert sum(g is None for g in got) > 0


def test_index_recover_uniform_and_fail_rate():
    """x inside T only, a = 200, b = 2: successes are exact and spread evenly over T."""
    rng = np.random.default_rng(3)
    n, a, b, c = 4096, 200, 2, 3
    T = rng.choice(n, a, replace=False)
    counts = np.zeros(n, dtype=np.int64)
    runs = fails = 0
    while runs < 100_000:
        supp = T[rng.random(a) < 0.5]
        vals = rng.integers(1, c + 1, supp.size)
        x = np.zeros(n, dtype=np.int64)
        x[supp] = vals % 5
        s = SNRecoverySketch(n, a, b, c, seed=runs)
        s.update(supp, vals)
        ok, idx, val = s.levels[0].recover({}, s._pad(set(T.tolist()), a))
        assert np.array_equal(x[idx[ok]], val[ok])
        runs += ok.size
        fails += int(np.count_nonzero(~ok))
        np.add.at(counts, idx[ok], 1)
    freq = counts[T] / counts.sum()
    assert 0.5 * np.abs(freq - 1 / a).sum() <= 0.05
    assert fails / runs <= 0.8 + 0.02


def test_partial_recovery_zero_vector():
    n, a, b = 1024, 400, 4
    T = list(range(100, 500))
    small = 0
    for seed in range(20):
        s = SNRecoverySketch(n, a, b, 2, seed=seed)
        r = s.recover(T)
        tr = r.trace[0]
        assert all(v == 0 for v in tr.recovered.values())
        assert r.neighbors == frozenset()
        small += len(tr.T_next) <= a / 4
    assert small >= 19


def test_partial_recovery_support_inside_T(rng):
    n, a, b = 4096, 400, 4
    good = 0
    for seed in range(60):
        T, supp, vals, _ = promise_instance(rng, n, a, 0, 3)
        x = {int(i): int(v) % 5 for i, v in zip(supp, vals)}
        s = SNRecoverySketch(n, a, b, 3, seed=seed)
        s.update(supp, vals)
        tr = s.recover(T).trace[0]
        lv = s.schedule.levels[0]
        resid = {i for i in set(x) | set(tr.recovered) if (x.get(i, 0) - tr.recovered.get(i, 0)) % 5}
        good += len(resid - tr.T_next) <= b + 12 * (lv.gamma * b + b * b / a)
    assert good >= 0.95 * 60


def test_partial_recovery_bounds(rng):
    """After each level the unknown residual outside T_{j+1} has at most b_{j+1} nonzeros, and |T_{j+1}| <= a_{j+1}."""
    n, a, b, c = 4096, 640, 1, 3
    good = total = 0
    for seed in range(40):
        T, supp, vals, _ = promise_instance(rng, n, a, b, c)
        x = {int(i): int(v) % 5 for i, v in zip(supp, vals)}
        s = SNRecoverySketch(n, a, b, c, seed=seed)
        s.update(supp, vals)
        r = s.recover(T)
        known: dict[int, int] = {}
        bs = [lv.b for lv in s.schedule.levels]
        lv_last = s.schedule.levels[-1]
        bs.append(lv_last.b + 12 * (lv_last.gamma * lv_last.b + lv_last.b ** 2 / lv_last.a))
        for tr, lv, nb in zip(r.trace, s.schedule.levels, bs[1:]):
            for i, v in tr.recovered.items():
                known[i] = (known.get(i, 0) + v) % 5
            resid = {i for i in set(x) | set(known) if (x.get(i, 0) - known.get(i, 0)) % 5}
            total += 1
            good += len(resid - tr.T_next) <= nb and len(tr.T_next) <= lv.a / 4
    assert good >= 0.95 * total


@pytest.mark.parametrize("n,a,b,c,runs", [(4096, 400, 4, 4, 40), (4096, 640, 1, 3, 25), (1024, 400, 2, 2, 40)])
def test_snr_matches_dense_oracle(rng, n, a, b, c, runs):
    exact = 0
    for seed in range(runs):
        T, supp, vals, want = promise_instance(rng, n, a, b, c)
        s = SNRecoverySketch(n, a, b, c, seed=seed)
        s.update(supp, vals)
        try:
            exact += snr_recover(s, T) == want
        except RecoveryFailed:
            pass
    assert exact >= 0.95 * runs


def test_snr_graph_mode():
    n, S = 64, [0, 1]
    s = SNRecoverySketch(n, 100, 1, 2, S=S, seed=3)
    T = list(range(10, 40))
    s.feed_many([(0, v, 1) for v in T[:20]] + [(1, v, 1) for v in T[10:25]] + [(1, 50, 1), (2, 3, 1), (0, 1, 1)])
    assert snr_recover(s, T) == {50}
    r = s.recover(T)
    assert r.vector[50] == 1 and r.vector[15] == 1 and r.vector[25] == 2


def test_snr_tiny_agrees_with_exhaustive(rng):
    n, a, b, c = 24, 12, 2, 3
    both = agree = 0
    for seed in range(60):
        T, supp, vals, want = promise_instance(rng, n, a, b, c)
        s = SNRecoverySketch(n, a, b, c, seed=seed)
        e = ExhaustiveSNR(n, a, b, c, seed=seed)
        s.update(supp, vals)
        e.update(supp, vals)
        try:
            got_s = snr_recover(s, T)
            got_e = exhaustive_snr_recover(e, T)
        except (RecoveryFailed, NoCandidate):
            continue
        both += 1
        agree += got_s == got_e == want
    assert both >= 50 and agree == both


def test_exhaustive_every_instance_n10():
    """All vectors with x|_T arbitrary and at most one nonzero outside T; recover == brute force == truth."""
    n, a, b, c = 10, 4, 1, 2
    T = [0, 1, 2, 3]
    outside = range(4, 10)
    e0 = ExhaustiveSNR(n, a, b, c, seed=11)
    q = e0.q
    count = 0
    for inside in itertools.product(range(q), repeat=len(T)):
        for pos in [None, *outside]:
            for val in ([0] if pos is None else range(1, q)):
                e = ExhaustiveSNR(n, a, b, c, seed=11)
                idx, vs = list(T), list(inside)
                if pos is not None:
                    idx.append(pos)
                    vs.append(val)
                e.update(idx, vs)
                want = frozenset() if pos is None else frozenset([pos])
                assert e.recover(T) == want
                assert e.brute_force(T) == want
                count += 1
    assert count == q ** 4 * (1 + 6 * (q - 1))


def test_exhaustive_random_instances(rng):
    n, a, b, c = 20, 6, 2, 2
    for seed in range(30):
        e = ExhaustiveSNR(n, a, b, c, seed=seed)
        rows = e.rows
        assert rows.shape == (e.rows_count, n)
        T = rng.choice(n, a, replace=False)
        outside = np.setdiff1d(np.arange(n), T)
        want = frozenset(rng.choice(outside, 2, replace=False).tolist())
        e.update(list(want) + T[:3].tolist(), [1, 2, 1, 1, 2])
        assert e.recover(T) == want


def test_exhaustive_products_separate_candidates(rng):
    """Two distinct candidate vectors never agree on all the inner products (10^5 pairs)."""
    n, a, b, c = 24, 12, 2, 3
    collisions = 0
    for seed in range(100):
        e = ExhaustiveSNR(n, a, b, c, seed=seed)
        x = rng.integers(0, e.q, (1000, n))
        y = rng.integers(0, e.q, (1000, n))
        y[:, :12] = x[:, :12]   # differ only in a few places outside the first half
        y[:, 12:] = np.where(rng.random((1000, 12)) < 0.85, x[:, 12:], y[:, 12:])
        d = (x - y) % e.q
        distinct = d.any(axis=1)
        same = ~((e.rows @ d.T) % e.q).any(axis=0)
        collisions += int(np.count_nonzero(same & distinct))
    assert collisions == 0


def test_exhaustive_errors():
    e = ExhaustiveSNR(40, 2, 6, 4, seed=1, work_bound=1000)
    with pytest.raises(WorkBoundExceeded):
        e.recover([0])
    with pytest.raises(WorkBoundExceeded):
        ExhaustiveSNR(12, 6, 1, 2, work_bound=100).brute_force(range(6))
    e = ExhaustiveSNR(12, 2, 1, 2, seed=3)
    e.update([5, 6, 7, 8], [1, 1, 1, 1])
    with pytest.raises(NoCandidate):
        e.recover([0, 1])
    with pytest.raises(TypeError):
        e.feed_many([(0, 1, 1)])


def test_recovery_failed_when_promise_broken(rng):
    n, a, b, c = 4096, 400, 4, 4
    fails = 0
    for seed in range(5):
        s = SNRecoverySketch(n, a, b, c, seed=seed)
        supp = rng.choice(n, 1500, replace=False)
        s.update(supp, np.ones(supp.size, dtype=np.int64))
        with pytest.raises(RecoveryFailed):
            s.recover(supp[:a])
        fails += 1
    assert fails == 5


def test_snr_vector_mode_errors():
    s = SNRecoverySketch(32, 100, 1, 2)
    with pytest.raises(ValueError):
        s.update([32], [1])
    with pytest.raises(TypeError):
        s.feed_many([(0, 1, 1)])
    with pytest.raises(ValueError):
        SNRecoverySketch(32, 0, 1, 2)


def test_snr_depth_zero_decodes_directly():
    s = SNRecoverySketch(64, 12, 2, 3, seed=1)
    assert s.schedule.depth == 0 and s.final.k == 14
    s.update([1, 2, 40], [1, 3, 2])
    assert snr_recover(s, [1, 2]) == {40}


def test_snr_space_regression():
    n, a, b, c = 4096, 2048, 20, 4
    m = SNRecoverySketch(n, a, b, c).measure()
    scale = a * math.log2(c) + b * math.log2(n) * math.log2(c)
    assert m.sketch_bits == 760606
    assert m.sketch_bits <= C_SNR * scale * 1.05
    assert m.total_randomness <= C_RAND * a * math.log2(n) * 1.05
    naive = L0Bank(1, n, delta_f=0.01, delta_e=float(n) ** -10, value_bound=c).measure(a + b)
    assert m.sketch_bits / naive.sketch_bits <= 0.2
    assert m.total / naive.total <= 0.2


def test_snr_copies_share_randomness():
    a = SNRecoverySketch(256, 100, 1, 3, seed=9, S=[0])
    b = SNRecoverySketch(256, 100, 1, 3, seed=9, S=[1])
    c = SNRecoverySketch(256, 100, 1, 3, seed=10, S=[1])
    ma, mb, mc = a.measure(), b.measure(), c.measure()
    assert (ma + mb).total == 2 * ma.sketch_bits + ma.total_randomness
    assert (ma + mc).total == ma.total + mc.total
