import json
from math import sqrt

import pytest

from triple_spread.core import DenseGraph, Triple, TripleSet, all_triples, verify_decomposition
from triple_spread.exact_oracle import enumerate_all, solve, steiner_triple_system
from triple_spread.params import PipelineParams
from triple_spread.pipeline import (
    PipelineSampler,
    TrialRecord,
    construct,
    construct_recursive,
    estimate_spread,
    point_mass_sampler,
    threshold_sweep,
    uncovered_pair_check,
    uniform_sampler,
    wilson_interval,
)
from triple_spread.sampling import Seed, sample_g3

from helpers import fixture_params, load_fixture

K21 = fixture_params("k21_params.json")


def test_params_validation():
    with pytest.raises(ValueError):
        PipelineParams(reserve_q=1.5)
    with pytest.raises(ValueError):
        PipelineParams(base_case_n=5)
    with pytest.raises(ValueError):
        PipelineParams.from_dict({"no_such_knob": 1})
    p = PipelineParams(x_size=11)
    assert PipelineParams.from_dict(json.loads(p.to_json())) == p


def test_k3_oracle_route():
    rec = construct(DenseGraph.complete(3), PipelineParams(), Seed(0))
    assert rec.success and rec.route == "oracle"
    assert list(rec.decomposition) == [Triple(0, 1, 2)]


def test_k5_precondition():
    rec = construct(DenseGraph.complete(5), PipelineParams(), Seed(0))
    assert not rec.success and rec.failure_stage == "precondition"


def test_depth_zero_is_oracle():
    g = DenseGraph.complete(9)
    for s in range(30):
        cands = sample_g3(9, 0.6, Seed(s))
        rec = construct_recursive(g, PipelineParams(), 0, Seed(s), candidates=cands)
        assert rec.route == "oracle"
        assert rec.success == (solve(g, cands) is not None)
        if rec.success:
            assert set(rec.decomposition) <= set(cands)


def test_recursion_terminates():
    g = DenseGraph.complete(21)
    rec = construct_recursive(g, K21, 10, Seed(3))
    assert isinstance(rec, TrialRecord)
    if rec.success:
        assert verify_decomposition(g, rec.decomposition).valid


def test_record_serializes():
    rec = construct(DenseGraph.complete(21), K21, Seed(0))
    data = json.loads(rec.to_json())
    assert set(data["events"]) == {"E_IA", "E_Ind", "E_Abs"}
    assert data["success"] == rec.success
    assert data["failure_stage"] in (None, "precondition", "template", "ia", "inner", "absorbers", "assemble")


def test_known_success_seed_verifies_and_keeps_x_free():
    # seed 1833 is one of the rare K_21 successes under the fixture params
    g = DenseGraph.complete(21)
    rec = construct(g, K21, 1833)
    assert rec.success
    assert verify_decomposition(g, rec.decomposition).valid
    x = sum(1 << v for v in rec.stages["template"]["x"])
    # every edge inside X is covered through a vertex outside X or by a flip
    assert all(t.mask & x != t.mask for t in rec.decomposition)


def test_successes_verify_and_failures_name_a_stage():
    g = DenseGraph.complete(21)
    for s in range(30):
        rec = construct(g, K21, Seed(s))
        if rec.success:
            assert verify_decomposition(g, rec.decomposition).valid
            assert all(rec.events.values())
        else:
            assert rec.failure_stage is not None and rec.decomposition is None


@pytest.mark.xfail(strict=True, reason="leftover inside X at n=21 is rarely decomposable; measured 0/100 over seeds 0-99")
def test_k21_success_rate_half():
    g = DenseGraph.complete(21)
    ok = fail = 0
    for s in range(100):
        rec = construct(g, K21, Seed(s))
        ok += rec.success
        fail += not rec.success
        if fail > 50:  # 0.5 of 100 is no longer reachable
            break
    assert ok / 100 >= 0.5


@pytest.mark.slow
def test_k33_one_recursion_level_recorded():
    fx = load_fixture("k33_params.json")
    params = PipelineParams.from_dict(fx["params"])
    g = DenseGraph.complete(33)
    lo, hi = fx["seeds"]
    ok = 0
    for s in range(lo, hi):
        rec = construct_recursive(g, params, fx["depth"], Seed(s))
        if rec.success:
            ok += 1
            assert verify_decomposition(g, rec.decomposition).valid
    rate = ok / (hi - lo)
    print(f"K_33 |X|=15 success rate {rate:.2f} (fixture {fx['baseline_success_rate']:.2f})")
    assert rate >= fx["baseline_success_rate"] - 0.10


def test_spread_point_mass():
    rep = estimate_spread(point_mass_sampler(steiner_triple_system(7).triples), 200, 50, Seed(0))
    assert rep.q1 == 1.0 and rep.q2 == 1.0 and rep.successes == 200


def test_spread_needs_trials():
    with pytest.raises(ValueError):
        estimate_spread(point_mass_sampler([Triple(0, 1, 2)]), 10, 5, Seed(0))


def test_spread_uniform_sts7_pairs():
    systems = enumerate_all(DenseGraph.complete(7), all_triples(7))
    sets = [set(d.triples) for d in systems]
    trials = 20000
    rep = estimate_spread(uniform_sampler(systems), trials, 1000, Seed(1))
    assert rep.pairs_checked == 35 * 34 // 2
    a, b = rep.q2_pair
    joint = sum(a in s and b in s for s in sets) / 30
    # all pairs meeting in one point are equivalent under relabeling; other pairs never co-occur
    best = max(sum(x in s and y in s for s in sets) for x in all_triples(7) for y in all_triples(7) if x < y) / 30
    assert joint == best
    se = sqrt(joint * (1 - joint) / trials)
    # the reported pair is a maximum over 595 pairs, so allow one extra standard error
    assert abs(rep.q2 ** 2 - joint) <= 4 * se
    assert abs(rep.q1 - 0.2) <= 3 * sqrt(0.2 * 0.8 / trials)


def test_pipeline_sampler_report():
    rep = estimate_spread(PipelineSampler(DenseGraph.complete(7), PipelineParams()), 100, 50, Seed(0))
    assert rep.successes == 100 and 0 < rep.q1 <= 1


def test_sweep_endpoints():
    rows = threshold_sweep(7, [0.0, 1.0], 20, seed=0)
    assert [r[4] for r in rows] == [0.0, 1.0]
    assert threshold_sweep(9, [0.0], 5)[0][4] == 0.0


def test_sweep_rejects_bad_order():
    with pytest.raises(ValueError):
        threshold_sweep(8, [1.0], 2)


def test_sweep_n13_below_full_at_uncovered_p():
    # pick the grid point where the mean number of uncovered pairs first reaches 1
    grid = [0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.6, 1.0]
    trials = 60
    means = []
    for p in grid:
        means.append(sum(uncovered_pair_check(sample_g3(13, p, Seed(0).child(t).child(0)), 13)
                         for t in range(trials)) / trials)
    p_star = max(p for p, m in zip(grid, means) if m >= 1)
    rows = threshold_sweep(13, [p_star, 1.0], trials, seed=0)
    assert rows[0][4] < rows[1][4] == 1.0


def test_uncovered_pair_examples():
    assert uncovered_pair_check(all_triples(9), 9) == 0
    assert uncovered_pair_check(TripleSet(7), 7) == 21


def test_wilson_interval():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0 < hi < 0.4
    assert wilson_interval(10, 10)[1] == 1.0
