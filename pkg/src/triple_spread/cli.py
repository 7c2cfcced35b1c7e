"""Command-line entry point: construct, sweep, spread, verify, oracle."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import exact_oracle
from .core import DenseGraph, FormatError, TripleSet, all_triples, format_triples, parse_triples, verify_decomposition
from .params import PipelineParams
from .pipeline import (
    SWEEP_HEADER,
    PipelineSampler,
    construct_recursive,
    default_workers,
    estimate_spread,
    point_mass_sampler,
    threshold_sweep,
    uniform_sampler,
    uncovered_pair_check,
)
from .sampling import Seed, sample_g3, sample_latin_support

log = logging.getLogger("triple_spread")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: Optional[int] = None
    p: float = 1.0
    p_grid: list = field(default_factory=list)
    trials: int = 100
    seed: int = 0
    method: str = "oracle"
    workers: int = 1
    out: Optional[str] = None
    params: dict = field(default_factory=dict)
    latin: bool = False
    depth: int = 1
    pairs: int = 200
    files: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def pipeline_params(self) -> PipelineParams:
        return PipelineParams.from_dict(self.params)


def parse_grid(text: str) -> list[float]:
    """``0,0.1,0.5`` or ``start:stop:count`` (inclusive linspace)."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, k = text.split(":")
            return [round(float(x), 12) for x in np.linspace(float(a), float(b), int(k))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --p-grid {text!r}") from None


def _check_sts_order(n: Optional[int]) -> int:
    if n is None:
        raise UsageError("--n is required")
    if n % 6 not in (1, 3):
        raise UsageError(f"no Steiner triple system of order {n}: need n ≡ 1, 3 (mod 6)")
    return n


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_construct(cfg: RunConfig, stdout=sys.stdout) -> int:
    from .latin import TripartiteGraph, construct_latin, format_grid, solve_latin, triples_to_grid

    seed = Seed(cfg.seed)
    if cfg.latin:
        if not cfg.n or cfg.n < 1:
            raise UsageError("--n must be a positive order")
        n = cfg.n
        support = sample_latin_support(n, cfg.p, seed.child(0))
        if cfg.method == "oracle":
            grid = solve_latin(support)
            record = {"success": grid is not None, "route": "oracle",
                      "failure_stage": None if grid is not None else "oracle"}
        else:
            rec = construct_latin(TripartiteGraph.complete(n), cfg.pipeline_params(), seed.child(1),
                                  candidates=support.triples(), depth=cfg.depth)
            grid = triples_to_grid(rec.decomposition, n) if rec.success else None
            record = rec.to_dict()
        if grid is None:
            print(f"construction failed at stage {record['failure_stage']}", file=sys.stderr)
            _emit_record(cfg, record)
            return EXIT_FAIL
        text = format_grid(grid)
        _emit(cfg, "square.txt", text, stdout)
        _emit_record(cfg, record)
        return EXIT_OK

    n = _check_sts_order(cfg.n)
    g = DenseGraph.complete(n)
    cands = all_triples(n) if cfg.p >= 1.0 else sample_g3(n, cfg.p, seed.child(0))
    if cfg.method == "oracle":
        dec = exact_oracle.solve(g, cands)
        ts = dec.triples if dec is not None else None
        record = {"success": ts is not None, "route": "oracle",
                  "failure_stage": None if ts is not None else "oracle", "candidates": len(cands)}
    elif cfg.method == "pipeline":
        rec = construct_recursive(g, cfg.pipeline_params(), cfg.depth, seed.child(1),
                                  candidates=None if cfg.p >= 1.0 else cands)
        ts = rec.decomposition if rec.success else None
        record = rec.to_dict()
    else:
        raise UsageError(f"unknown method {cfg.method!r}")
    if ts is None or not verify_decomposition(g, ts):
        print(f"construction failed at stage {record['failure_stage']}", file=sys.stderr)
        _emit_record(cfg, record)
        return EXIT_FAIL
    _emit(cfg, "decomposition.txt", format_triples(ts, n), stdout)
    _emit_record(cfg, record)
    return EXIT_OK


def _emit(cfg: RunConfig, name: str, text: str, stdout) -> None:
    if cfg.out:
        _write(Path(cfg.out) / name, text)
    else:
        stdout.write(text)


def _emit_record(cfg: RunConfig, record: dict) -> None:
    if cfg.out:
        out = Path(cfg.out)
        _write(out / "record.json", json.dumps(record, sort_keys=True, default=str) + "\n")
        _write(out / "config.json", cfg.to_json() + "\n")


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for n, p, trials, s, f, lo, hi in rows:
        w.writerow([n, repr(p), trials, s, f"{f:.6f}", f"{lo:.6f}", f"{hi:.6f}"])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig, stdout=sys.stdout) -> int:
    from .latin import latin_threshold_sweep

    if not cfg.p_grid:
        raise UsageError("--p-grid is required")
    if cfg.method not in ("oracle", "pipeline"):
        raise UsageError(f"unknown method {cfg.method!r}")
    params = cfg.pipeline_params()
    if cfg.latin:
        if not cfg.n or cfg.n < 1:
            raise UsageError("--n must be a positive order")
        rows = latin_threshold_sweep(cfg.n, cfg.p_grid, cfg.trials, Seed(cfg.seed), cfg.method, params, cfg.workers)
    else:
        rows = threshold_sweep(_check_sts_order(cfg.n), cfg.p_grid, cfg.trials, cfg.method, Seed(cfg.seed),
                               params, cfg.workers)
    text = sweep_csv(rows)
    if cfg.out:
        _write(Path(cfg.out), text)
    else:
        stdout.write(text)
    return EXIT_OK


def cmd_spread(cfg: RunConfig, stdout=sys.stdout) -> int:
    n = _check_sts_order(cfg.n)
    g = DenseGraph.complete(n)
    if cfg.method == "oracle":
        if n > 9:
            raise UsageError("uniform spread by enumeration is only feasible for n <= 9")
        sampler = uniform_sampler(exact_oracle.enumerate_all(g, all_triples(n)))
    elif cfg.method == "point":
        sampler = point_mass_sampler(exact_oracle.steiner_triple_system(n).triples)
    elif cfg.method == "pipeline":
        sampler = PipelineSampler(g, cfg.pipeline_params(), cfg.depth)
    else:
        raise UsageError(f"unknown method {cfg.method!r}")
    report = estimate_spread(sampler, cfg.trials, cfg.pairs, Seed(cfg.seed), workers=cfg.workers)
    out = {"config": asdict(cfg), "report": report.to_dict()}
    text = json.dumps(out, sort_keys=True, indent=2) + "\n"
    if cfg.out:
        _write(Path(cfg.out), text)
    else:
        stdout.write(text)
    return EXIT_OK if report.successes else EXIT_FAIL


def cmd_verify(cfg: RunConfig, stdout=sys.stdout) -> int:
    from .latin import is_latin_square, parse_grid as parse_square

    if not cfg.files:
        raise UsageError("no files given")
    status = EXIT_OK
    for name in cfg.files:
        try:
            text = Path(name).read_text()
        except OSError as exc:
            raise UsageError(str(exc)) from None
        if cfg.latin:
            ok = is_latin_square(parse_square(text))
            detail = "latin square" if ok else "not a latin square"
        else:
            n, triples = parse_triples(text)
            report = verify_decomposition(DenseGraph.complete(n), triples)
            ok = report.valid
            detail = f"STS({n})" if ok else report.first_violation
        stdout.write(f"{name}: {'ok' if ok else 'invalid'} ({detail})\n")
        if not ok:
            status = EXIT_FAIL
    return status


def cmd_oracle(cfg: RunConfig, stdout=sys.stdout) -> int:
    n = _check_sts_order(cfg.n)
    g = DenseGraph.complete(n)
    cands = all_triples(n) if cfg.p >= 1.0 else sample_g3(n, cfg.p, Seed(cfg.seed).child(0))
    missing = uncovered_pair_check(cands, n)
    dec = exact_oracle.solve(g, cands) if not missing else None
    out = {"n": n, "p": cfg.p, "seed": cfg.seed, "candidates": len(cands), "uncovered_pairs": missing,
           "solvable": dec is not None}
    stdout.write(json.dumps(out, sort_keys=True) + "\n")
    if dec is not None and cfg.out:
        _write(Path(cfg.out), format_triples(dec.triples, n))
    return EXIT_OK if dec is not None else EXIT_FAIL


COMMANDS = {
    "construct": cmd_construct,
    "sweep": cmd_sweep,
    "spread": cmd_spread,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triple-spread", description="Steiner triple systems in random hypergraphs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, methods):
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--method", choices=methods, default=methods[0])
        sp.add_argument("--params", help="JSON file with PipelineParams fields")
        sp.add_argument("--out")
        sp.add_argument("--depth", type=int, default=1)

    sp = sub.add_parser("construct", help="build one decomposition")
    common(sp, ["oracle", "pipeline"])
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--latin", action="store_true")

    sp = sub.add_parser("sweep", help="success frequency over a p grid")
    common(sp, ["oracle", "pipeline"])
    sp.add_argument("--p-grid", required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--latin", action="store_true")

    sp = sub.add_parser("spread", help="empirical spread of a decomposition distribution")
    common(sp, ["oracle", "pipeline", "point"])
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--pairs", type=int, default=200)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("verify", help="check decomposition or Latin square files")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--latin", action="store_true")

    sp = sub.add_parser("oracle", help="exact decision on one G3(n, p) sample")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = {}
    if getattr(args, "params", None):
        try:
            params = PipelineParams.from_json_file(args.params).to_dict()
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad --params file: {exc}") from None
    workers = getattr(args, "workers", None)
    if workers is None:
        workers = default_workers()
    p = getattr(args, "p", 1.0)
    if not 0.0 <= p <= 1.0:
        raise UsageError("--p must lie in [0, 1]")
    grid = parse_grid(args.p_grid) if getattr(args, "p_grid", None) else []
    if any(not 0.0 <= x <= 1.0 for x in grid):
        raise UsageError("--p-grid values must lie in [0, 1]")
    return RunConfig(
        command=args.command,
        n=getattr(args, "n", None),
        p=p,
        p_grid=grid,
        trials=getattr(args, "trials", 100),
        seed=getattr(args, "seed", 0),
        method=getattr(args, "method", "oracle"),
        workers=workers,
        out=getattr(args, "out", None),
        params=params,
        latin=getattr(args, "latin", False),
        depth=getattr(args, "depth", 1),
        pairs=getattr(args, "pairs", 200),
        files=list(getattr(args, "files", []) or []),
    )


def run(cfg: RunConfig, stdout=None) -> int:
    return COMMANDS[cfg.command](cfg, sys.stdout if stdout is None else stdout)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except (UsageError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
