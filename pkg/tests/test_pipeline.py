import json
import math

import numpy as np
import pytest

from sketchmatch.instances import erdos_renyi, hard_sparse_induced, net_edge_list, planted_matching
from sketchmatch.matching import dp_matching_size, validate_matching
from sketchmatch.pipeline import (ConfigError, ParityStore, Pipeline, PipelineConfig, opt_guesses, pipeline_build,
                                  pipeline_recover, run_pipeline)
from sketchmatch.stream import make_stream, num_pairs

# frozen: total bits * alpha^3 / n^2 for the all-sketch configuration at n = 2^16
C_PIPE = 2797

# frozen totals for the acceptance matrix (small-alpha threshold 2, other settings default)
MATRIX_BITS = {
    (1024, 2): 523776, (1024, 4): 194799968, (1024, 8): 523776,
    (2048, 2): 2096128, (2048, 4): 277913226, (2048, 8): 2096128,
    (4096, 2): 8386560, (4096, 4): 949938854, (4096, 8): 196697162,
}


def sketch_only(n, alpha, **kw):
    return PipelineConfig(n, alpha, fallback="best_effort_mos", small_alpha_threshold=2, regime_opt_factor=0, **kw)


def test_guesses():
    assert opt_guesses(1024) == [1 << i for i in range(11)]
    assert len(opt_guesses(1000)) == 11
    assert len(Pipeline(sketch_only(1024, 4)).guesses) == 11


def test_small_alpha_is_one_parity_store():
    p = pipeline_build(PipelineConfig(1024, 2.0, small_alpha_threshold=2))
    assert p.guesses == [] and isinstance(p.parity, ParityStore)
    assert p.measure().total == num_pairs(1024)
    assert p.regime_flags()["small_alpha_branch"]


def test_beta():
    assert PipelineConfig(64, 4).beta == 16


@pytest.mark.parametrize("bad", [dict(n=1), dict(alpha=1.0), dict(delta=0.0), dict(delta=0.6),
                                 dict(fallback="nope"), dict(budget_bits=-1), dict(sparsify_copies=0)])
def test_config_rejected(bad):
    kw = dict(n=64, alpha=4.0)
    kw.update(bad)
    with pytest.raises(ConfigError):
        Pipeline(PipelineConfig(**kw))


def test_error_fallback_raises():
    with pytest.raises(ConfigError):
        Pipeline(PipelineConfig(64, 4.0, small_alpha_threshold=2, fallback="error"))


def test_budget_pushes_parity_to_mos():
    cfg = PipelineConfig(256, 4.0, small_alpha_threshold=2, budget_bits=100)
    p = Pipeline(cfg)
    assert p.parity is None
    assert all(g.fallback == "best_effort_mos" and g.mos is not None for g in p.guesses)
    assert p.bits_report()["within_budget"] is False


def test_empty_graph():
    for cfg in (PipelineConfig(32, 2.0, small_alpha_threshold=2), sketch_only(32, 4.0)):
        rep = run_pipeline(make_stream(32, []), cfg)
        assert rep.matching == []


def test_parity_branch_exact(rng):
    for _ in range(40):
        n = int(rng.integers(4, 25))
        st = erdos_renyi(n, float(rng.uniform(0.05, 0.5)), deletion_fraction=0.3, seed=int(rng.integers(1 << 30)))
        rep = run_pipeline(st, PipelineConfig(n, 2.0, small_alpha_threshold=2))
        edges = net_edge_list(st)
        assert len(rep.matching) == dp_matching_size(edges)
        assert validate_matching(rep.matching, edges).valid


def test_parity_branch_exact_n64():
    st = planted_matching(64, 20, distractors=30, deletion_fraction=0.4, seed=3)
    rep = run_pipeline(st, PipelineConfig(64, 2.0, small_alpha_threshold=2))
    assert len(rep.matching) == 20


def test_output_always_matching_and_real(rng):
    for seed in range(10):
        st = planted_matching(256, 64, distractors=50, deletion_fraction=0.3, seed=seed)
        for cfg in (sketch_only(256, 4.0, seed=seed), PipelineConfig(256, 4.0, seed=seed, small_alpha_threshold=2)):
            rep = run_pipeline(st, cfg)
            v = validate_matching(rep.matching, net_edge_list(st))
            assert v.valid, v.as_dict()
            assert rep.validation["disjoint"]


def test_sketch_path_with_sparsify_built():
    st = planted_matching(24, 6, seed=1)
    cfg = PipelineConfig(24, 3.0, seed=10, small_alpha_threshold=2, regime_opt_factor=0,
                         sparsify_copies=1, tester_scale=0.05)
    p = Pipeline(cfg)
    assert any(g.sparsify_status == "built" for g in p.guesses) or all(
        g.sparsify_status == "unreachable" for g in p.guesses)
    rep = p.feed_stream(st).recover()
    assert validate_matching(rep.matching, net_edge_list(st)).valid


def test_report_json_shape():
    st = planted_matching(64, 16, seed=1)
    rep = run_pipeline(st, PipelineConfig(64, 4.0, small_alpha_threshold=2))
    d = json.loads(json.dumps(rep.as_dict()))
    assert set(d) == {"schema", "matching", "bits", "winning_opt", "regime_flags", "validation", "candidates"}
    assert set(d["bits"]) >= {"total", "sketch", "randomness", "per_guess"}
    assert d["regime_flags"]["below_analysed_alpha"] is True


def test_feed_stream_checks_n():
    with pytest.raises(ValueError):
        Pipeline(PipelineConfig(16, 2.0, small_alpha_threshold=2)).feed_stream(make_stream(8, []))


@pytest.mark.parametrize("n,alpha", sorted(MATRIX_BITS))
def test_matrix_bit_budgets(n, alpha):
    assert Pipeline(PipelineConfig(n, alpha, small_alpha_threshold=2)).measure().total == MATRIX_BITS[n, alpha]


def test_space_profile():
    n = 1 << 16
    totals = {}
    for alpha in (4, 8):
        p = Pipeline(sketch_only(n, alpha))
        per = {g.opt: g.meter().total for g in p.guesses}
        totals[alpha] = (p.measure().total, per)
        assert p.measure().total <= C_PIPE * n * n / alpha ** 3
    per4 = totals[4][1]
    top = max(per4)
    assert per4[top] / per4[top // 2] == pytest.approx(4, rel=0.25)
    assert sum(per4.values()) / per4[top] <= 4 / 3 * 1.1
    assert totals[4][1][top] / totals[8][1][top] == pytest.approx(8, rel=0.3)


def test_more_guesses_never_shrink(rng):
    st = planted_matching(128, 32, distractors=20, seed=4)
    full = Pipeline(sketch_only(128, 4.0, seed=2)).feed_stream(st)
    fewer = Pipeline(sketch_only(128, 4.0, seed=2)).feed_stream(st)
    fewer.guesses = fewer.guesses[::2]
    assert len(full.recover().matching) >= len(fewer.recover().matching)


def test_hard_family_parity_win():
    st = hard_sparse_induced(256, 4.0, seed=3)
    rep = pipeline_recover(Pipeline(PipelineConfig(256, 4.0, small_alpha_threshold=2)).feed_stream(st))
    assert rep.winning_opt == "parity"
    assert len(rep.matching) >= 128 / 4
