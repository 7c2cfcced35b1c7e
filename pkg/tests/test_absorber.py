from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triple_spread.absorber import (
    Absorber,
    AbsorberAssignment,
    AbsorberSelectionError,
    apply_flips,
    build_absorber,
    count_conflicting_roots,
    find_rooted_absorber,
    flip,
    iter_rooted_absorbers,
    select_disjoint_absorbers,
)
from triple_spread.core import DenseGraph, Triple, TripleSet, as_mask, verify_decomposition
from triple_spread.sampling import Seed

X6 = as_mask(range(6))
ROOT1 = Triple(0, 1, 2)
ROOT2 = Triple(3, 4, 5)
# two m=3 absorbers sharing the triangle {6, 8, 9}
SHARED_1 = [(2, 6, 7), (0, 7, 8), (6, 8, 9), (0, 9, 10), (1, 6, 10)]
SHARED_2 = [(5, 6, 11), (3, 8, 11), (6, 8, 9), (3, 9, 12), (4, 6, 12)]
# an absorber for ROOT1 on fresh vertices
FRESH_1 = [(2, 20, 21), (0, 21, 22), (20, 22, 23), (0, 23, 24), (1, 20, 24)]


def ts(n, triples):
    return TripleSet(n, (Triple.of(*t) for t in triples))


def completing(f: Absorber):
    return [t for t in f.triangles if t != f.root]


FRESH_1_M2 = [tuple(t) for t in completing(build_absorber(2, ROOT1, [20, 21, 22]))]


def check_algebra(f: Absorber):
    m = f.m
    assert len(set(f.vertices)) == 2 * m + 2
    assert len(f.triangles) == 2 * m and f.root in f.triangles
    assert f.triangles.is_edge_disjoint() and len(f.edges()) == 6 * m
    fl = flip(f)
    assert len(fl) == 2 * m and fl.is_edge_disjoint()
    assert {e for t in fl for e in t.edges()} == f.edges()
    assert not set(fl) & set(f.triangles)
    shadow = DenseGraph.from_edges(max(f.vertices) + 1, f.edges())
    assert verify_decomposition(shadow, f.triangles).valid and verify_decomposition(shadow, fl).valid


def test_build_m2():
    f = build_absorber(2, Triple(0, 1, 2), [3, 4, 5])
    assert len(f.vertices) == 6 and len(f.triangles) == 4 and len(f.edges()) == 12
    check_algebra(f)


def test_build_m3():
    f = build_absorber(3, Triple(0, 1, 2), [3, 4, 5, 6, 7])
    assert len(f.vertices) == 8 and len(f.triangles) == 6
    check_algebra(f)


def test_build_errors():
    with pytest.raises(ValueError):
        build_absorber(2, Triple(0, 1, 2), [3, 3, 5])
    with pytest.raises(ValueError):
        build_absorber(2, Triple(0, 1, 2), [2, 4, 5])
    with pytest.raises(ValueError):
        build_absorber(2, Triple(0, 1, 2), [3, 4])
    with pytest.raises(ValueError):
        build_absorber(1, Triple(0, 1, 2), [3])


def test_flip_involution_and_root():
    f = build_absorber(2, Triple(0, 1, 2), [3, 4, 5])
    g = f.flipped()
    assert set(g.triangles) == set(flip(f))
    assert set(flip(g)) == set(f.triangles)
    assert f.root not in flip(f)


def test_m2_concrete_instance():
    f = build_absorber(2, Triple(0, 1, 2), [3, 4, 5])
    assert set(f.triangles) == {Triple(0, 1, 2), Triple(2, 3, 4), Triple(0, 4, 5), Triple(1, 3, 5)}
    assert set(flip(f)) == {Triple(1, 2, 3), Triple(0, 2, 4), Triple(3, 4, 5), Triple(0, 1, 5)}
    assert {e for t in flip(f) for e in t.edges()} == f.edges()


@pytest.mark.parametrize("m", [2, 3, 4])
def test_few_vertices_property(m):
    f = build_absorber(m, Triple(0, 1, 2), list(range(3, 2 * m + 2)))
    tris = list(f.triangles)
    for k in range(1, len(tris) + 1):
        for sub in combinations(tris, k):
            assert len({v for t in sub for v in t}) >= k + 2


@pytest.mark.parametrize("m", [2, 3, 4])
def test_tripartite_absorber(m):
    # apexes in part 0, cycle alternating parts 1 and 2
    a, b = 0, 1
    cycle = list(range(2, 2 * m + 2))
    parts = [0, 0] + [1 + (i % 2) for i in range(2 * m)]
    f = build_absorber(m, Triple.of(a, cycle[0], cycle[1]), [b] + cycle[2:], apex=a)
    for t in list(f.triangles) + list(flip(f)):
        assert sorted(parts[v] for v in t) == [0, 1, 2]
    check_algebra(f)
    h = TripleSet(f.triangles.n, completing(f))
    found = find_rooted_absorber(h, f.root, m, f.root.mask, parts=parts)
    assert found is not None and set(found.triangles) == set(f.triangles)


def test_find_planted():
    f = build_absorber(2, ROOT1, [3, 4, 5])
    h = TripleSet(6, completing(f))
    got = find_rooted_absorber(h, ROOT1, 2, ROOT1.mask)
    assert got is not None and set(got.triangles) == set(f.triangles)
    assert find_rooted_absorber(TripleSet(6), ROOT1, 2, ROOT1.mask) is None


def test_find_root_outside_x_rejected():
    with pytest.raises(ValueError):
        find_rooted_absorber(TripleSet(6), ROOT1, 2, 0b11)


def _with_decoys(f: Absorber, n: int, count: int, rng):
    used = set(f.edges())
    out = completing(f)
    while len(out) < len(completing(f)) + count:
        t = Triple.of(*(int(v) for v in rng.choice(n, 3, replace=False)))
        if used & set(t.edges()):
            continue
        used.update(t.edges())
        out.append(t)
    return TripleSet(n, out)


def test_find_planted_with_decoys():
    rng = np.random.default_rng(0)
    for trial in range(20):
        f = build_absorber(2, ROOT1, [int(v) for v in rng.choice(np.arange(3, 40), 3, replace=False)])
        h = _with_decoys(f, 40, 50, rng)
        assert h.is_edge_disjoint()
        got = find_rooted_absorber(h, ROOT1, 2, ROOT1.mask)
        assert got is not None and set(got.triangles) == set(f.triangles)


def test_count_conflicting_examples():
    assert count_conflicting_roots(TripleSet(13), ROOT1, 3, X6) == 0
    shared = ts(13, SHARED_1 + SHARED_2)
    assert find_rooted_absorber(shared, ROOT1, 3, X6) is not None
    assert find_rooted_absorber(shared, ROOT2, 3, X6) is not None
    assert count_conflicting_roots(shared, ROOT1, 3, X6) == 1
    f2 = build_absorber(2, ROOT2, [13, 14, 15])
    separate = ts(25, FRESH_1_M2 + [tuple(t) for t in completing(f2)])
    assert separate.is_edge_disjoint()
    assert count_conflicting_roots(separate, ROOT1, 2, X6) == 0


def test_select_single_root():
    f = build_absorber(2, ROOT1, [3, 4, 5])
    a = select_disjoint_absorbers([ROOT1], [(0, TripleSet(6, completing(f)))], 2, ROOT1.mask, Seed(0))
    idx, got = a.choices[ROOT1]
    assert idx == 0 and set(got.triangles) == set(f.triangles)


def test_select_empty():
    a = select_disjoint_absorbers([], [(0, TripleSet(6))], 2, 0, Seed(0))
    assert len(a) == 0 and a.absorbers() == []


def test_select_distinct_banks_on_conflict():
    bank1 = ts(25, SHARED_1 + SHARED_2)
    bank2 = ts(25, FRESH_1)
    assert count_conflicting_roots(bank1, ROOT1, 3, X6) == 1
    assert count_conflicting_roots(bank2, ROOT1, 3, X6) == 0
    for s in range(20):
        a = select_disjoint_absorbers([ROOT1, ROOT2], [(1, bank1), (2, bank2)], 3, X6, Seed(s))
        assert a.choices[ROOT1][0] == 2 and a.choices[ROOT2][0] == 1
        edges = [e for f in a.absorbers() for e in f.edges()]
        assert len(edges) == len(set(edges))


def test_select_missing_root_raises():
    with pytest.raises(AbsorberSelectionError):
        select_disjoint_absorbers([ROOT2], [(0, ts(25, FRESH_1))], 3, X6, Seed(0))


def test_select_unresolvable_conflict_raises():
    with pytest.raises(AbsorberSelectionError):
        select_disjoint_absorbers([ROOT1, ROOT2], [(1, ts(13, SHARED_1 + SHARED_2))], 3, X6, Seed(0), max_restarts=5)


def random_flip_fixture(rng, m=None):
    """An absorber on random labels inside a decomposition-like edge-disjoint set."""
    m = m or int(rng.integers(2, 6))
    n = int(rng.integers(2 * m + 2, 40))
    verts = [int(v) for v in rng.permutation(n)[: 2 * m + 2]]
    f = build_absorber(m, Triple.of(*verts[:3]), verts[3:], apex=verts[int(rng.integers(3))])
    used = set(f.edges())
    d = list(f.triangles)
    for _ in range(int(rng.integers(0, 30))):
        t = Triple.of(*(int(v) for v in rng.choice(n, 3, replace=False)))
        if not used & set(t.edges()):
            used.update(t.edges())
            d.append(t)
    return f, TripleSet(n, d)


def flip_exchange_ok(f, d) -> bool:
    swapped = (set(d) - set(f.triangles)) | set(flip(f))
    out = TripleSet(d.n, swapped)
    before = {e for t in d for e in t.edges()}
    after = {e for t in out for e in t.edges()}
    return out.is_edge_disjoint() and before == after and f.root not in out


def test_flip_exchange_random_fixtures():
    rng = np.random.default_rng(1)
    for _ in range(200):
        f, d = random_flip_fixture(rng)
        assert flip_exchange_ok(f, d)


def test_apply_flips():
    f, d = random_flip_fixture(np.random.default_rng(5), m=2)
    out = apply_flips(d, AbsorberAssignment({f.root: (0, f)}))
    assert out == (set(d) - set(f.triangles)) | set(flip(f))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 5), st.permutations(list(range(12))))
def test_algebra_any_labels(m, perm):
    verts = perm[: 2 * m + 2]
    f = build_absorber(m, Triple.of(*verts[:3]), verts[3:])
    check_algebra(f)
    # searching the completing triangles recovers an absorber with the same class
    h = TripleSet(12, completing(f))
    assert any(set(g.triangles) == set(f.triangles) for g in iter_rooted_absorbers(h, f.root, m, f.root.mask))
