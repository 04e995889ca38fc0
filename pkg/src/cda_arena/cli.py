"""Command-line entry point: ``cda-arena``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

from . import experiments as ex
from .traders import STRATEGIES, ParamError, ParamTable, canonical_strategy

log = logging.getLogger("cda_arena")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("cda-arena")
    except metadata.PackageNotFoundError:
        return "unknown"


def parse_pair(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--pair wants A:B, got {text!r}")
    try:
        return canonical_strategy(parts[0]), canonical_strategy(parts[1])
    except ValueError as e:
        raise UsageError(str(e)) from None


def parse_ratios(text: str) -> tuple[tuple[int, int], ...]:
    if text == "all":
        return ex.ALL_RATIOS
    out = []
    for item in text.split(","):
        try:
            a, b = (int(x) for x in item.strip().split(":"))
        except ValueError:
            raise UsageError(f"malformed ratio {item!r}; expected e.g. 1:19,10:10") from None
        if a < 0 or b < 0 or a + b != ex.N_PER_SIDE:
            raise UsageError(f"ratio {item!r} must be non-negative and sum to {ex.N_PER_SIDE}")
        out.append((a, b))
    if not out:
        raise UsageError("empty ratio list")
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cda-arena",
                                description="Pairwise CDA trading-strategy contests.")
    which = p.add_mutually_exclusive_group()
    which.add_argument("--pair", help="two strategies, e.g. AA:ZIC")
    which.add_argument("--all-pairs", action="store_true", help="all 15 pairs of the six strategies")
    which.add_argument("--fixture-graph", metavar="FILE",
                       help="build a dominance graph from a totals CSV; runs no sessions")
    p.add_argument("--engine", choices=("sync", "async"), default="sync")
    p.add_argument("--p0", choices=("static", "dynamic"), default="static")
    p.add_argument("--ratios", default="all", help="'all' or a list like 1:19,10:10")
    p.add_argument("--sessions", type=int, default=100, help="sessions per ratio")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=os.environ.get("CDA_ARENA_OUT"),
                   help="output directory (default $CDA_ARENA_OUT)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--params", metavar="FILE", help="strategy parameter file")
    p.add_argument("--duration", type=float, default=30.0, help="sync session length")
    p.add_argument("--polls-per-second", type=float, default=1.0,
                   help="sync polls per trader per unit time")
    p.add_argument("--wall-clock", type=float, default=10.0, help="async session seconds")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _manifest_base(args: argparse.Namespace, params: ParamTable) -> dict:
    flags = {k: v for k, v in vars(args).items()}
    return {"tool": "cda-arena", "version": _version(), "python": platform.python_version(),
            "flags": flags, "params_file": args.params, "params_sha256": params.sha256,
            "base_seed": args.seed, "cpu_count": os.cpu_count(),
            "started": datetime.now(timezone.utc).isoformat(), "contests": []}


def _run_fixture_graph(args: argparse.Namespace, out: Optional[Path]) -> int:
    path = Path(args.fixture_graph)
    if not path.exists():
        raise UsageError(f"no such file {path}")
    rows = ex.read_totals_csv(path.read_text())
    graph = ex.build_dominance_graph(rows)
    dot = graph.to_dot()
    if out is None:
        sys.stdout.write(dot)
    else:
        target = out / f"{path.stem}.dot"
        ex.atomic_write(target, dot)
        manifest = {"tool": "cda-arena", "version": _version(), "flags": vars(args),
                    "fixture": str(path), "outputs": [str(target)],
                    "finished": datetime.now(timezone.utc).isoformat()}
        ex.atomic_write(out / f"{path.stem}.manifest.json", json.dumps(manifest, indent=2) + "\n")
    for name, deg in graph.ranking():
        log.info("%s in=%d out=%d", name, graph.indegree[name], deg)
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = Path(args.out) if args.out else None
    try:
        if args.fixture_graph:
            return _run_fixture_graph(args, out)
        if not args.pair and not args.all_pairs:
            raise UsageError("one of --pair, --all-pairs or --fixture-graph is required")
        if out is None:
            raise UsageError("--out (or CDA_ARENA_OUT) is required")
        if args.sessions < 1 or args.workers < 1:
            raise UsageError("--sessions and --workers must be >= 1")
        ratios = parse_ratios(args.ratios)
        pairs = ex.all_pairs(STRATEGIES) if args.all_pairs else [parse_pair(args.pair)]
        if args.params and not Path(args.params).exists():
            raise UsageError(f"params file {args.params} not found")
        try:
            params = ParamTable.load(args.params) if args.params else ParamTable.default()
        except ParamError as e:
            raise UsageError(str(e)) from None
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"cda-arena: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    template = ex.SessionTemplate(duration=args.duration, polls_per_second=args.polls_per_second,
                                  wall_clock_duration=args.wall_clock, params=params)
    manifest = _manifest_base(args, params)
    manifest["session_template"] = template.to_dict()
    results, failed = [], False
    for a, b in pairs:
        spec = ex.ContestSpec(a, b, ratios=ratios, sessions_per_ratio=args.sessions,
                              engine=args.engine, p0_treatment=args.p0, base_seed=args.seed,
                              session=template)
        dest = out / f"{a}_{b}" / args.engine / args.p0
        entry = {"pair": spec.pair, "dir": str(dest)}
        t0 = time.perf_counter()
        try:
            res = ex.run_contest(spec, workers=args.workers)
            files = ex.emit_outputs(res, "csv", dest)
            results.append(res)
            entry.update(status="ok", wins_a=res.wins_a, wins_b=res.wins_b, draws=res.draws,
                         invalid=res.invalid, outputs=[str(f) for f in files])
            log.info("%s: %d-%d (%d draws, %d invalid)", spec.pair, res.wins_a, res.wins_b,
                     res.draws, res.invalid)
        except Exception as e:  # recorded, run continues with the next pair
            failed = True
            entry.update(status="failed", error=f"{type(e).__name__}: {e}")
            log.error("%s failed: %s", spec.pair, e)
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        manifest["contests"].append(entry)

    # single-pair runs keep everything inside the pair directory; all-pairs runs
    # add combined totals and the graph at the top level
    top = out if args.all_pairs else out / f"{pairs[0][0]}_{pairs[0][1]}" / args.engine / args.p0
    if args.all_pairs and results:
        ex.atomic_write(top / f"totals_{args.engine}_{args.p0}.csv", ex.totals_csv(results))
    if args.all_pairs and not failed:
        graph = ex.build_dominance_graph(results, STRATEGIES)
        ex.emit_outputs(graph, "dot", top / f"dominance_{args.engine}_{args.p0}.dot")
        manifest["graph"] = {"outdegree": graph.outdegree, "ties": graph.ties}
    manifest["finished"] = datetime.now(timezone.utc).isoformat()
    manifest["status"] = "partial_failure" if failed else "ok"
    name = f"manifest_{args.engine}_{args.p0}.json" if args.all_pairs else "manifest.json"
    ex.atomic_write(top / name, json.dumps(manifest, indent=2, default=str) + "\n")
    return EXIT_RUNTIME if failed else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
