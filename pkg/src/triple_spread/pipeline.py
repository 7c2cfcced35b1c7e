"""The bootstrapping construction and the measurements built on it.

``construct`` runs one randomized attempt at a triangle decomposition of G:

    template   random X, banks (X_i, Y_i) and a linear triangle sample H_i per bank
    ia         iterative absorption on G' = G - E(⋃ H_i) down a vortex to X,
               using only triangles of an independent sample H_IA
    inner      decompose what is left inside X using triangles of H_Rand
    absorbers  one edge-disjoint bank absorber per inner triangle
    assemble   H_Dec ∪ flips ∪ (bank triangles not used by an absorber)

Each stage draws from its own child seed. Failures are returned in the
TrialRecord, never retried here.
"""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb, log, sqrt
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import exact_oracle
from .absorber import AbsorberSelectionError, apply_flips, flip, select_disjoint_absorbers
from .core import (
    DenseGraph,
    Triple,
    TripleSet,
    as_mask,
    complement_max_degree,
    is_triangle_divisible,
    members,
    triangles_of,
    uncovered_pairs,
    verify_decomposition,
)
from .params import PipelineParams
from .sampling import Seed, as_seed, linear_filter, sample_from, sample_g3, shuffled
from .vortex import StageError, build_vortex, run_vortex

log_ = logging.getLogger(__name__)

# child-seed slots per stage
SEED_X, SEED_BANKS, SEED_IA, SEED_RAND, SEED_VORTEX, SEED_LEVELS, SEED_INNER, SEED_ABS = range(8)


class PreconditionError(ValueError):
    pass


@dataclass
class Bank:
    index: int
    x_mask: int
    y_mask: int
    h: TripleSet
    h_prime: TripleSet


@dataclass
class TrialRecord:
    seed: Seed
    params: dict
    success: bool = False
    failure_stage: Optional[str] = None
    failure_reason: Optional[str] = None
    route: str = "pipeline"
    events: dict = field(default_factory=lambda: {"E_IA": None, "E_Ind": None, "E_Abs": None})
    stages: dict = field(default_factory=dict)
    decomposition: Optional[TripleSet] = None

    def to_dict(self) -> dict:
        return {
            "seed": {"master": self.seed.master, "path": list(self.seed.path)},
            "params": self.params,
            "success": self.success,
            "failure_stage": self.failure_stage,
            "failure_reason": self.failure_reason,
            "route": self.route,
            "events": self.events,
            "stages": self.stages,
            "decomposition": [list(t) for t in self.decomposition] if self.decomposition is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    return str(o)


class _Stage:
    def __init__(self, record: TrialRecord, name: str):
        self.record = record
        self.name = name
        self.info: dict = {}

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.info

    def __exit__(self, exc_type, exc, tb):
        self.info["seconds"] = round(time.perf_counter() - self.t0, 6)
        self.info["ok"] = exc is None
        self.record.stages[self.name] = self.info
        if exc is not None and isinstance(exc, (StageError, AbsorberSelectionError, PreconditionError)):
            self.record.failure_stage = self.name
            self.record.failure_reason = str(exc)
            self.info["error"] = str(exc)
        return False


def _balanced_pick(pool_mask: int, size: int, seed: Seed, parts: Optional[Sequence[int]]) -> int:
    pool = members(pool_mask)
    rng = seed.rng()
    if parts is None:
        if size > len(pool):
            raise PreconditionError(f"need {size} vertices, only {len(pool)} available")
        picked = rng.choice(len(pool), size=size, replace=False)
        return as_mask(pool[i] for i in picked.tolist())
    if size % 3:
        raise PreconditionError("part-balanced sets need a size divisible by 3")
    out = 0
    for j in range(3):
        sub = [v for v in pool if parts[v] == j]
        if size // 3 > len(sub):
            raise PreconditionError(f"need {size // 3} vertices in part {j}, only {len(sub)} available")
        picked = rng.choice(len(sub), size=size // 3, replace=False)
        out |= as_mask(sub[i] for i in picked.tolist())
    return out


def _greedy_packing(h_prime: TripleSet, seed: Seed) -> TripleSet:
    used: set = set()
    keep = []
    for t in shuffled(list(h_prime), seed):
        if not used.intersection(t.edges()):
            used.update(t.edges())
            keep.append(t)
    return TripleSet(h_prime.n, keep)


def build_template(
    g: DenseGraph,
    params: PipelineParams,
    seed: Seed,
    universe: int,
    parts: Optional[Sequence[int]] = None,
    candidates: Optional[TripleSet] = None,
) -> tuple[int, list[Bank], dict]:
    """Pick X and the banks, then sample each bank's triangles."""
    seed = as_seed(seed)
    x_mask = _balanced_pick(universe, params.x_size, seed.child(0), parts)
    inner_size = params.bank_inner_size or params.x_size
    need = params.min_bank_cover()
    x_triangles = list(triangles_of(g, x_mask))
    info: dict = {"x_size": x_mask.bit_count(), "x": members(x_mask)}
    for attempt in range(params.bank_retries + 1):
        rest = universe & ~x_mask
        sets = []
        for i in range(params.bank_count):
            y = _balanced_pick(rest, params.bank_outer_size, seed.child(1, attempt, i), parts)
            rest &= ~y
            xi = _balanced_pick(x_mask, inner_size, seed.child(2, attempt, i), parts)
            sets.append((xi, y))
        cover = [sum(1 for xi, _ in sets if t.mask & xi == t.mask) for t in x_triangles]
        if all(c >= need for c in cover):
            break
    else:
        raise PreconditionError(f"bank selection failed: some triangle of G[X] in fewer than {need} banks")
    info["bank_attempts"] = attempt + 1
    info["min_triangle_cover"] = min(cover, default=0)
    banks = []
    for i, (xi, y) in enumerate(sets):
        gi = g.induced(xi | y).minus(g.induced(xi))
        pool = triangles_of(gi)
        if candidates is not None:
            pool = TripleSet(g.n, (t for t in pool if t in candidates))
        density = params.bank_triple_density
        if density is None:
            density = 1.0 / max(1, (xi | y).bit_count())
        h_prime = sample_from(pool, density, seed.child(3, i))
        if params.bank_mode == "linear":
            h = linear_filter(h_prime)
        else:
            h = _greedy_packing(h_prime, seed.child(4, i))
        banks.append(Bank(i, xi, y, h, h_prime))
    info["bank_sizes"] = [len(b.h) for b in banks]
    return x_mask, banks, info


def _relabel(g: DenseGraph, mask: int, candidates: Optional[TripleSet]):
    verts = members(mask)
    pos = {v: i for i, v in enumerate(verts)}
    sub = DenseGraph.from_edges(len(verts), ((pos[u], pos[v]) for u, v in g.induced(mask).edges()))
    cands = None
    if candidates is not None:
        cands = TripleSet(len(verts), (tuple(pos[v] for v in t) for t in candidates if t.mask & mask == t.mask))
    return sub, verts, cands


def _oracle_route(g, universe, candidates, record: TrialRecord) -> TrialRecord:
    record.route = "oracle"
    with _Stage(record, "oracle") as info:
        pool = triangles_of(g, universe) if candidates is None else candidates
        dec = exact_oracle.solve(g, TripleSet(g.n, pool))
        info["found"] = dec is not None
    if dec is None:
        record.failure_stage = "oracle"
        record.failure_reason = "no decomposition within the candidate triples"
        return record
    record.decomposition = dec.triples
    record.success = True
    return record


def _check_hypotheses(g: DenseGraph, universe: int, params: PipelineParams, parts) -> None:
    if parts is None:
        if not is_triangle_divisible(g):
            raise PreconditionError("graph is not triangle-divisible")
    else:
        from .latin import is_tripartite_divisible_dense

        if not is_tripartite_divisible_dense(g, parts):
            raise PreconditionError("graph is not tripartite-divisible")
    n = universe.bit_count()
    if n > 2:
        bound = params.complement_degree_slack * n / log(n)
        missing = _complement_degree(g, universe, parts)
        if missing > bound:
            raise PreconditionError(f"complement max degree {missing} exceeds {bound:.2f}")


def _complement_degree(g: DenseGraph, universe: int, parts) -> int:
    if parts is None:
        return complement_max_degree(g, universe)
    worst = 0
    for v in members(universe):
        others = sum(1 << w for w in members(universe) if parts[w] != parts[v])
        worst = max(worst, (others & ~g.adj[v]).bit_count())
    return worst


def construct_recursive(
    g: DenseGraph,
    params: PipelineParams,
    depth: int,
    seed,
    candidates: Optional[TripleSet] = None,
    parts: Optional[Sequence[int]] = None,
    universe: Optional[int] = None,
) -> TrialRecord:
    """One attempt at a decomposition of ``g`` using triangles from ``candidates``.

    The inner decomposition inside X is found by calling this function again
    on the leftover there (``depth - 1``), bottoming out in the exact oracle
    once depth reaches 0 or the graph has at most ``base_case_n`` vertices.
    """
    seed = as_seed(seed)
    universe = universe if universe is not None else (g.vertex_mask() or as_mask(None, g.n))
    record = TrialRecord(seed=seed, params=params.to_dict())
    try:
        with _Stage(record, "precondition"):
            _check_hypotheses(g, universe, params, parts)
    except PreconditionError:
        return record
    n_active = universe.bit_count()
    if depth <= 0 or n_active <= params.base_case_n:
        return _oracle_route(g, universe, candidates, record)

    try:
        with _Stage(record, "template") as info:
            x_mask, banks, tinfo = build_template(g, params, seed.child(SEED_BANKS), universe, parts, candidates)
            info.update(tinfo)
        bank_triples = TripleSet(g.n).union(*(b.h for b in banks))
        g_prime = g.minus_triples(bank_triples)

        pool_all = triangles_of(g_prime, universe)
        if candidates is not None:
            pool_all = TripleSet(g.n, (t for t in pool_all if t in candidates))
        h_ia = sample_from(pool_all, params.ia_density, seed.child(SEED_IA))
        x_pool = triangles_of(g, x_mask)
        if candidates is not None:
            x_pool = TripleSet(g.n, (t for t in x_pool if t in candidates))
        h_rand = sample_from(x_pool, params.inner_density, seed.child(SEED_RAND))

        with _Stage(record, "ia") as info:
            record.events["E_IA"] = False
            vortex = build_vortex(g.n, x_mask, params.vortex_ratio, seed.child(SEED_VORTEX),
                                  universe=universe, parts=parts)
            info["vortex_sizes"] = list(vortex.sizes)
            ia = run_vortex(g_prime, vortex, params, seed.child(SEED_LEVELS), parts=parts, candidates=h_ia)
            info["levels"] = ia.levels
            info["h_ia"] = len(h_ia)
            info["h_dec"] = len(ia.covered)
            info["leftover_edges"] = ia.leftover.edge_count
            record.events["E_IA"] = True

        with _Stage(record, "inner") as info:
            record.events["E_Ind"] = False
            info["h_rand"] = len(h_rand)
            h_ind = _inner_decomposition(ia.leftover, x_mask, h_rand, params, depth, seed.child(SEED_INNER), parts)
            info["h_ind"] = len(h_ind)
            record.events["E_Ind"] = True

        with _Stage(record, "absorbers") as info:
            record.events["E_Abs"] = False
            assignment = select_disjoint_absorbers(
                h_ind, [(b.index, b.h) for b in banks], params.absorber_m, x_mask,
                seed.child(SEED_ABS), max_restarts=params.absorber_restarts, parts=parts,
            )
            info["roots"] = len(h_ind)
            info["resamples"] = assignment.resamples
            info["banks_used"] = sorted({i for i, _ in assignment.choices.values()})
            record.events["E_Abs"] = True

        with _Stage(record, "assemble") as info:
            h_abs = set()
            h_flip = set()
            for f in assignment.absorbers():
                h_abs.update(set(f.triangles) - {f.root})
                h_flip.update(flip(f))
            final = set(ia.covered) | h_flip | (set(bank_triples) - h_abs)
            # every inner triangle must have been exchanged away
            if final & set(h_ind):
                raise StageError("inner triangle survived the flip")
            if any(t.mask & x_mask == t.mask for t in h_flip):
                raise StageError("flip produced a triangle inside X")
            result = TripleSet(g.n, final)
            report = verify_decomposition(g, result)
            info["verified"] = report.valid
            if not report.valid:
                raise StageError(f"assembled system failed verification: {report.first_violation}")
            info["h_flip"] = len(h_flip)
            info["bank_kept"] = len(bank_triples) - len(h_abs)
    except (StageError, AbsorberSelectionError, PreconditionError):
        return record

    record.decomposition = result
    record.success = True
    return record


def _inner_decomposition(leftover: DenseGraph, x_mask: int, h_rand: TripleSet, params: PipelineParams,
                         depth: int, seed: Seed, parts) -> TripleSet:
    if leftover.edge_count == 0:
        return TripleSet(leftover.n)
    if depth - 1 <= 0 or x_mask.bit_count() <= params.base_case_n:
        dec = exact_oracle.solve(leftover, h_rand)
        if dec is None:
            raise StageError("leftover inside X has no decomposition within H_Rand")
        return dec.triples
    sub, verts, cands = _relabel(leftover, x_mask, h_rand)
    sub_parts = [parts[v] for v in verts] if parts is not None else None
    n_sub = len(verts)
    sub_x = max(3, round(n_sub * params.x_size / max(1, leftover.n)))
    if parts is not None:
        sub_x = max(3, sub_x - sub_x % 3)
    sub_params = params.with_(x_size=sub_x, bank_inner_size=None)
    rec = construct_recursive(sub, sub_params, depth - 1, seed, candidates=cands, parts=sub_parts,
                              universe=as_mask(None, n_sub))
    if not rec.success:
        raise StageError(f"recursive inner decomposition failed at {rec.failure_stage}: {rec.failure_reason}")
    return TripleSet(leftover.n, (Triple.of(*(verts[i] for i in t)) for t in rec.decomposition))


def construct(
    g: DenseGraph,
    params: PipelineParams,
    seed,
    candidates: Optional[TripleSet] = None,
    parts: Optional[Sequence[int]] = None,
) -> TrialRecord:
    """Single-level construction: the inner decomposition comes straight from the oracle."""
    return construct_recursive(g, params, 1, seed, candidates=candidates, parts=parts)


# spread ------------------------------------------------------------------

Sampler = Callable[[Seed], Optional[Iterable[Triple]]]


@dataclass(frozen=True)
class SpreadReport:
    trials: int
    successes: int
    q1: float
    q1_ci: float
    q2: float
    q2_ci: float
    per_triple_max: Optional[tuple]
    pairs_checked: int
    q2_pair: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "q1": self.q1,
            "q1_ci": self.q1_ci,
            "q2": self.q2,
            "q2_ci": self.q2_ci,
            "per_triple_max": list(self.per_triple_max) if self.per_triple_max else None,
            "pairs_checked": self.pairs_checked,
            "q2_pair": [list(t) for t in self.q2_pair] if self.q2_pair else None,
        }


def uniform_sampler(decompositions: Sequence) -> Sampler:
    systems = [tuple(d.triples if hasattr(d, "triples") else d) for d in decompositions]

    def draw(seed: Seed):
        return systems[int(seed.rng().integers(len(systems)))]

    return draw


def point_mass_sampler(ts: Iterable[Triple]) -> Sampler:
    fixed = tuple(ts)
    return lambda seed: fixed


class PipelineSampler:
    """Draws from the construction's output distribution; failures return None."""

    def __init__(self, g: DenseGraph, params: PipelineParams, depth: int = 1):
        self.g = g
        self.params = params
        self.depth = depth

    def __call__(self, seed: Seed):
        rec = construct_recursive(self.g, self.params, self.depth, seed)
        return tuple(rec.decomposition) if rec.success else None


def _draw(args):
    sampler, seed = args
    out = sampler(seed)
    return None if out is None else tuple(out)


def estimate_spread(sampler: Sampler, trials: int, pair_sample: int, seed, workers: int = 1) -> SpreadReport:
    """Empirical q for |S| = 1 and |S| = 2 over ``trials`` independent draws.

    q1 is the largest single-triple inclusion frequency, q2 the square root of
    the largest joint frequency among ``pair_sample`` random pairs of observed
    triples. Radii are 1.96 normal-approximation standard errors.
    """
    if trials < 100:
        raise ValueError("spread estimation needs at least 100 trials")
    seed = as_seed(seed)
    draws = map_trials(_draw, [(sampler, seed.child(0, i)) for i in range(trials)], workers)
    ok = [d for d in draws if d is not None]
    if not ok:
        return SpreadReport(trials, 0, 0.0, 0.0, 0.0, 0.0, None, 0)
    universe = sorted({t for d in ok for t in d})
    col = {t: j for j, t in enumerate(universe)}
    incidence = np.zeros((len(ok), len(universe)), dtype=bool)
    for i, d in enumerate(ok):
        incidence[i, [col[t] for t in d]] = True
    freq = incidence.mean(axis=0)
    j = int(np.argmax(freq))
    q1 = float(freq[j])
    n_ok = len(ok)
    q1_ci = 1.96 * sqrt(q1 * (1 - q1) / n_ok)
    total_pairs = comb(len(universe), 2)
    if total_pairs <= pair_sample:
        pairs = [(a, b) for a in range(len(universe)) for b in range(a + 1, len(universe))]
    else:
        rng = seed.child(1).rng()
        pairs = set()
        while len(pairs) < pair_sample:
            a, b = rng.choice(len(universe), size=2, replace=False).tolist()
            pairs.add((min(a, b), max(a, b)))
        pairs = sorted(pairs)
    best_f, best_pair = 0.0, None
    for a, b in pairs:
        f = float((incidence[:, a] & incidence[:, b]).mean())
        if f > best_f:
            best_f, best_pair = f, (universe[a], universe[b])
    q2 = sqrt(best_f)
    q2_ci = 1.96 * sqrt(best_f * (1 - best_f) / n_ok) / (2 * q2) if q2 > 0 else 0.0
    return SpreadReport(trials, n_ok, q1, q1_ci, q2, q2_ci, tuple(universe[j]), len(pairs), best_pair)


# threshold sweeps -------------------------------------------------------

SWEEP_HEADER = ("n", "p", "trials", "successes", "frequency", "ci_low", "ci_high")


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def uncovered_pair_check(ts: TripleSet, n: int) -> int:
    return uncovered_pairs(TripleSet(n, ts))


def default_workers() -> int:
    return int(os.environ.get("TRIPLE_SPREAD_WORKERS", "1"))


def map_trials(fn, items: list, workers: int = 1) -> list:
    """Order-preserving map; results never depend on ``workers``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _sweep_trial(args) -> list[bool]:
    n, p_grid, method, seed, params = args
    target = DenseGraph.complete(n)
    out = []
    for p in p_grid:
        h = sample_g3(n, p, seed.child(0))
        if method == "oracle":
            out.append(exact_oracle.solve(target, h) is not None)
        else:
            rec = construct(target, params, seed.child(1), candidates=h)
            out.append(rec.success)
    return out


def sweep_table(n: int, p_grid: Sequence[float], outcomes: list[list[bool]]) -> list[tuple]:
    rows = []
    trials = len(outcomes)
    for j, p in enumerate(p_grid):
        s = sum(1 for o in outcomes if o[j])
        lo, hi = wilson_interval(s, trials)
        rows.append((n, float(p), trials, s, s / trials if trials else 0.0, lo, hi))
    return rows


def threshold_sweep(
    n: int,
    p_grid: Sequence[float],
    trials: int,
    method: str = "oracle",
    seed=0,
    params: Optional[PipelineParams] = None,
    workers: int = 1,
    return_outcomes: bool = False,
):
    """Success frequency of G³(n, p) per grid point, coupled across p.

    Trial t uses the same uniforms at every p, so candidate sets are nested
    along the grid.
    """
    if n % 6 not in (1, 3):
        raise ValueError(f"no Steiner triple system of order {n}: need n ≡ 1, 3 (mod 6)")
    if method not in ("oracle", "pipeline"):
        raise ValueError("method must be 'oracle' or 'pipeline'")
    seed = as_seed(seed)
    params = params or PipelineParams()
    grid = [float(p) for p in p_grid]
    outcomes = map_trials(_sweep_trial, [(n, grid, method, seed.child(t), params) for t in range(trials)], workers)
    rows = sweep_table(n, grid, outcomes)
    return (rows, outcomes) if return_outcomes else rows
