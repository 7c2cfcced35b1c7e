import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triple_spread.core import DenseGraph, Triple, TripleSet, all_triples, triangles_of, verify_decomposition
from triple_spread.exact_oracle import (
    ExactCoverInstance,
    bose_construction,
    count,
    enumerate_all,
    iter_decompositions,
    naive_count,
    skolem_construction,
    solve,
    steiner_triple_system,
)
from triple_spread.sampling import Seed, sample_from, sample_g3


def test_solve_examples(k7, fano):
    assert solve(DenseGraph.complete(5), all_triples(5)) is None
    d = solve(k7, all_triples(7))
    assert d is not None and verify_decomposition(k7, d.triples).valid
    d = solve(k7, fano)
    assert set(d.triples) == set(fano)


def test_count_examples():
    assert count(DenseGraph.complete(7), all_triples(7), cap=10**6) == 30
    assert naive_count(DenseGraph.complete(7), all_triples(7), cap=10**6) == 30
    assert count(DenseGraph.complete(3), TripleSet(3, [Triple(0, 1, 2)])) == 1
    assert count(DenseGraph.complete(7), all_triples(7), cap=10) == 10


def test_enumerate_examples():
    sols = enumerate_all(DenseGraph.complete(7), all_triples(7), cap=100)
    assert len(sols) == 30
    assert len({frozenset(d.triples) for d in sols}) == 30
    # every triple of K_7 lies in exactly 6 of the 30 systems
    hits = {t: sum(t in d.triples for d in sols) for t in all_triples(7)}
    assert set(hits.values()) == {6}
    assert [list(d.triples) for d in enumerate_all(DenseGraph.complete(3), all_triples(3))] == [[Triple(0, 1, 2)]]
    assert enumerate_all(DenseGraph.complete(5), all_triples(5)) == []


def test_instance_options_cover_three_items():
    inst = ExactCoverInstance.build(DenseGraph.complete(7), all_triples(7))
    assert len(inst.items) == 21
    assert all(len(set(o)) == 3 for o in inst.options)


@pytest.mark.parametrize("n", [3, 9, 15])
def test_bose_examples(n):
    d = bose_construction(n)
    assert len(d.triples) == n * (n - 1) // 6
    assert verify_decomposition(DenseGraph.complete(n), d.triples).valid
    if n == 3:
        assert list(d.triples) == [Triple(0, 1, 2)]


@pytest.mark.parametrize("n", [7, 13, 19])
def test_skolem_examples(n):
    d = skolem_construction(n)
    assert len(d.triples) == n * (n - 1) // 6
    assert verify_decomposition(DenseGraph.complete(n), d.triples).valid


def test_construction_residue_errors():
    with pytest.raises(ValueError, match="Bose requires"):
        bose_construction(7)
    with pytest.raises(ValueError):
        skolem_construction(9)
    with pytest.raises(ValueError):
        steiner_triple_system(11)


def test_solve_is_verified_on_fuzzed_instances():
    for s in range(300):
        n = [7, 9][s % 2]
        g = DenseGraph.complete(n)
        d = solve(g, sample_g3(n, 0.6, Seed(s)))
        if d is not None:
            assert verify_decomposition(g, d.triples).valid


def test_count_matches_enumeration_on_restricted_candidates():
    for s in range(40):
        n = [7, 9][s % 2]
        g = DenseGraph.complete(n)
        cands = sample_g3(n, 0.7, Seed(s))
        assert count(g, cands) == len(enumerate_all(g, cands)) == naive_count(g, cands)


def test_monotone_in_candidates():
    g = DenseGraph.complete(9)
    for s in range(100):
        base = Seed(s)
        small, large = sample_g3(9, 0.4, base), sample_g3(9, 0.7, base)
        assert set(small) <= set(large)
        if solve(g, small) is not None:
            assert solve(g, large) is not None


def test_iter_decompositions_on_subgraph():
    # two edge-disjoint triangles sharing a vertex: exactly one decomposition
    g = DenseGraph.from_edges(5, [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4)])
    sols = list(iter_decompositions(g, triangles_of(g)))
    assert len(sols) == 1 and set(sols[0]) == {Triple(0, 1, 2), Triple(0, 3, 4)}


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([7, 9]), st.floats(0.3, 1.0), st.integers(0, 10**6))
def test_solution_uses_only_candidates(n, p, s):
    cands = sample_g3(n, p, Seed(s))
    d = solve(DenseGraph.complete(n), cands)
    if d is not None:
        assert set(d.triples) <= set(cands)
