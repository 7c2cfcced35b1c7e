"""Rooted F_2m absorbers: construction, flip, search and disjoint selection.

Labeling used throughout: cycle ``c_0 .. c_{2m-1}``, apexes ``a`` and ``b``.
The absorber is the color class

    {a, c_{2j}, c_{2j+1}}  and  {b, c_{2j+1}, c_{2j+2}}    (j = 0 .. m-1)

with the root sitting at ``{a, c_0, c_1}``; the flip is the other class,
obtained by swapping the roles of ``a`` and ``b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .core import Triple, TripleSet, VertexSet, as_mask, edge_key
from .sampling import Seed, as_seed


@dataclass(frozen=True)
class Absorber:
    m: int
    cycle: tuple[int, ...]
    apex_a: int
    apex_b: int
    root: Triple
    triangles: TripleSet = field(compare=False, repr=False)

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.apex_a, self.apex_b) + self.cycle

    def edges(self) -> set:
        return {e for t in self.triangles for e in t.edges()}

    def flipped(self) -> "Absorber":
        """The flip viewed as an absorber rooted at ``{b, c_0, c_1}``."""
        return _assemble(self.m, self.cycle, self.apex_b, self.apex_a)


def _class_triangles(cycle: Sequence[int], a: int, b: int) -> list[Triple]:
    k = len(cycle)
    out = []
    for i in range(k):
        apex = a if i % 2 == 0 else b
        out.append(Triple.of(apex, cycle[i], cycle[(i + 1) % k]))
    return out


def _assemble(m: int, cycle: Sequence[int], a: int, b: int) -> Absorber:
    cycle = tuple(cycle)
    triangles = _class_triangles(cycle, a, b)
    n = max(max(cycle), a, b) + 1
    return Absorber(m, cycle, a, b, triangles[0], TripleSet(n, triangles))


def build_absorber(m: int, root: Triple, others: Sequence[int], apex: Optional[int] = None) -> Absorber:
    """Absorber whose class contains ``root``.

    ``apex`` picks which root vertex plays ``a`` (default the smallest); the
    other two become ``c_0 < c_1``. ``others`` is ``[b, c_2, ..., c_{2m-1}]``.
    """
    if m < 2:
        raise ValueError("absorber needs m >= 2")
    root = root if isinstance(root, Triple) else Triple.of(*root)
    others = list(others)
    if len(others) != 2 * m - 1:
        raise ValueError(f"need {2 * m - 1} further vertices for m={m}, got {len(others)}")
    a = root.a if apex is None else apex
    if a not in root:
        raise ValueError(f"apex {a} is not a vertex of the root {tuple(root)}")
    c0, c1 = sorted(v for v in root if v != a)
    b, rest = others[0], others[1:]
    vertices = [a, b, c0, c1, *rest]
    if len(set(vertices)) != len(vertices):
        raise ValueError(f"absorber vertices must be distinct, got {vertices}")
    return _assemble(m, (c0, c1, *rest), a, b)


def flip(f: Absorber) -> TripleSet:
    return TripleSet(f.triangles.n, _class_triangles(f.cycle, f.apex_b, f.apex_a))


def iter_rooted_absorbers(
    h: TripleSet,
    root: Triple,
    m: int,
    x: VertexSet,
    parts: Optional[Sequence[int]] = None,
) -> Iterator[Absorber]:
    """Every absorber for ``root`` whose other 2m-1 triangles lie in ``h``.

    Once the root embedding and the first b-triangle ``{b, c_1, c_2}`` are
    fixed, each further triangle is pinned down by the edge it must share
    with the apex, so the walk around the cycle only branches where ``h``
    has several triangles on that edge. ``parts`` (vertex -> part index)
    restricts to tripartite copies: apexes in one part, the cycle
    alternating between the other two.
    """
    root = root if isinstance(root, Triple) else Triple.of(*root)
    x_mask = as_mask(x)
    if root.mask & x_mask != root.mask:
        raise ValueError("root must lie inside x")
    index = h.edge_index
    by_vertex: dict[int, list[Triple]] = {}
    for t in h:
        for v in t:
            by_vertex.setdefault(v, []).append(t)

    def outside(v: int) -> bool:
        return not x_mask >> v & 1

    def third(t: Triple, u: int, v: int) -> int:
        return next(w for w in t if w != u and w != v)

    for a in root:
        c0, c1 = sorted(v for v in root if v != a)
        if parts is not None and not (
            parts[a] != parts[c0] and parts[a] != parts[c1] and parts[c0] != parts[c1]
        ):
            continue
        for t in by_vertex.get(c1, ()):
            if t == root:
                continue
            pair = [v for v in t if v != c1]
            for b, c2 in (pair, pair[::-1]):
                if not (outside(b) and outside(c2)):
                    continue
                if parts is not None and (parts[b] != parts[a] or parts[c2] != parts[c0]):
                    continue
                cycle = [c0, c1, c2]

                def extend(cycle: list[int]) -> Iterator[list[int]]:
                    k = len(cycle)
                    if k == 2 * m:
                        closing = Triple.of(b, cycle[-1], c0)
                        if closing in h:
                            yield cycle
                        return
                    apex = a if k % 2 == 1 else b
                    last = cycle[-1]
                    for t2 in index.get(edge_key(apex, last), ()):
                        nxt = third(t2, apex, last)
                        if not outside(nxt) or nxt in cycle or nxt in (a, b):
                            continue
                        if parts is not None and parts[nxt] != parts[cycle[k - 2]]:
                            continue
                        yield from extend(cycle + [nxt])

                for full in extend(cycle):
                    f = _assemble(m, full, a, b)
                    if f.root == root:
                        yield f


def find_rooted_absorber(
    h: TripleSet, root: Triple, m: int, x: VertexSet, parts: Optional[Sequence[int]] = None
) -> Optional[Absorber]:
    return next(iter_rooted_absorbers(h, root, m, x, parts), None)


def _share_triangle(fs: Iterable[Absorber], gs: Iterable[Absorber]) -> bool:
    for f in fs:
        tf = set(f.triangles) - {f.root}
        for g in gs:
            if tf & (set(g.triangles) - {g.root}):
                return True
    return False


def count_conflicting_roots(h: TripleSet, root: Triple, m: int, x: VertexSet) -> int:
    """Roots T' inside x, edge-disjoint from ``root``, whose absorbers in ``h``
    can collide with one of ``root``'s absorbers on a triangle."""
    from itertools import combinations

    from .core import members

    root = root if isinstance(root, Triple) else Triple.of(*root)
    mine = list(iter_rooted_absorbers(h, root, m, x))
    if not mine:
        return 0
    root_edges = set(root.edges())
    total = 0
    for combo in combinations(members(as_mask(x)), 3):
        other = Triple(*combo)
        if root_edges & set(other.edges()):
            continue
        theirs = list(iter_rooted_absorbers(h, other, m, x))
        if theirs and _share_triangle(mine, theirs):
            total += 1
    return total


@dataclass(frozen=True)
class AbsorberAssignment:
    choices: dict  # root Triple -> (bank index, Absorber)
    resamples: int = 0

    def absorbers(self) -> list[Absorber]:
        return [f for _, f in self.choices.values()]

    def __len__(self) -> int:
        return len(self.choices)


class AbsorberSelectionError(RuntimeError):
    def __init__(self, message: str, unsatisfied: list):
        super().__init__(message)
        self.unsatisfied = unsatisfied


def select_disjoint_absorbers(
    roots: Iterable[Triple],
    banks: Sequence[tuple[int, TripleSet]],
    m: int,
    x: VertexSet,
    seed: Seed,
    max_restarts: int = 200,
    parts: Optional[Sequence[int]] = None,
) -> AbsorberAssignment:
    """Pick one absorber per root, pairwise edge-disjoint.

    Each root draws a bank uniformly among those where it has an absorber,
    then an absorber uniformly inside that bank. Conflicting roots are
    redrawn (only those), Moser-Tardos style, at most ``max_restarts`` times.
    """
    roots = sorted(Triple.of(*r) for r in roots)
    rng = as_seed(seed).rng()
    options: dict[Triple, list[tuple[int, list[Absorber]]]] = {}
    for r in roots:
        found = []
        for idx, bank in banks:
            fs = list(iter_rooted_absorbers(bank, r, m, x, parts))
            if fs:
                found.append((idx, fs))
        options[r] = found
    missing = [r for r in roots if not options[r]]
    if missing:
        raise AbsorberSelectionError(
            f"absorber selection failed: {len(missing)} roots have no absorber in any bank", missing
        )

    def draw(r: Triple) -> tuple[int, Absorber]:
        idx, fs = options[r][rng.integers(len(options[r]))]
        return idx, fs[rng.integers(len(fs))]

    choice = {r: draw(r) for r in roots}
    for attempt in range(max_restarts + 1):
        owner: dict = {}
        bad: set[Triple] = set()
        for r in roots:
            for e in choice[r][1].edges():
                other = owner.setdefault(e, r)
                if other != r:
                    bad.update((r, other))
        if not bad:
            return AbsorberAssignment(dict(choice), resamples=attempt)
        if attempt == max_restarts:
            break
        for r in sorted(bad):
            choice[r] = draw(r)
    raise AbsorberSelectionError(
        f"absorber selection failed after {max_restarts} resamples", sorted(bad)
    )


def apply_flips(decomposition: Iterable[Triple], assignment: AbsorberAssignment) -> set[Triple]:
    """Swap each chosen absorber (root included) for its flip."""
    out = set(decomposition)
    for f in assignment.absorbers():
        out.difference_update(f.triangles)
        out.update(flip(f))
    return out
