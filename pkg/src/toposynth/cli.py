"""Command-line entry point: ``toposynth <command> --underlay PATH ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .builders import BUILDERS, BuilderResult, evaluate
from .config import BUILDER_NAMES, BW_MODELS, RunConfig
from .delay import ConnectivityGraph, Overlay, build_connectivity
from .dpasgd import (
    QuadraticTask,
    consensus_matrix,
    dpasgd_run,
    inverse_sqrt_schedule,
    loss_vs_time,
    time_to_threshold,
    write_training_csv,
)
from .errors import ToposynthError
from .io import (
    ComparisonReport,
    GraphMLDefaults,
    overlay_to_dict,
    parse_underlay,
    read_overlay,
    write_overlay,
)
from .simulator import empirical_throughput, simulate, write_trace_csv

log = logging.getLogger("toposynth")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--underlay", type=Path, help="underlay file (JSON or GraphML)")
    common.add_argument("--format", choices=("json", "graphml"), default=None, help="underlay format (default: by extension)")
    common.add_argument("--model-bits", type=float, default=None, help="model size M in bits")
    common.add_argument("--local-steps", type=int, default=1, help="local steps s per round")
    common.add_argument("--overlay", choices=BUILDER_NAMES + ("all",), default=None)
    common.add_argument("--overlay-file", type=Path, default=None, help="use a previously built overlay JSON")
    common.add_argument("--bw-model", choices=BW_MODELS, default="fair-share")
    common.add_argument("--rounds", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--no-access-latency", action="store_true", help="leave access-link latency out of l(i,j)")
    common.add_argument("--access-mbps", type=float, default=GraphMLDefaults.access_mbps, help="GraphML: access capacity")
    common.add_argument("--core-mbps", type=float, default=GraphMLDefaults.core_mbps, help="GraphML: default core capacity")
    common.add_argument("--compute-ms", type=float, default=GraphMLDefaults.compute_ms, help="GraphML: compute time")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="toposynth", description="Design and evaluate federated-learning overlays.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build one overlay and write it as JSON")
    sub.add_parser("cycle-time", parents=[common], help="print cycle time and critical circuit")
    sub.add_parser("simulate", parents=[common], help="simulate round start times, write trace CSV")
    sub.add_parser("compare", parents=[common], help="compare builders, write CSV and JSON report")
    t = sub.add_parser("train-toy", parents=[common], help="toy DPASGD run, write loss/time CSV")
    t.add_argument("--dim", type=int, default=5)
    t.add_argument("--lr", type=float, default=0.05, help="initial learning rate")
    t.add_argument("--noise", type=float, default=0.0, help="gradient noise std")
    t.add_argument(
        "--loss-threshold",
        type=float,
        default=0.01,
        help="report time to reach optimum + this fraction of the initial excess loss",
    )
    return p


def _connectivity(args) -> ConnectivityGraph:
    if args.underlay is None:
        raise ToposynthError("--underlay is required")
    if args.model_bits is None:
        raise ToposynthError("--model-bits is required with --underlay")
    cfg = RunConfig(args.model_bits, args.local_steps, args.bw_model, rounds=args.rounds, seed=args.seed)
    defaults = GraphMLDefaults(args.access_mbps, args.core_mbps, args.compute_ms)
    u = parse_underlay(args.underlay, args.format, defaults)
    args.underlay_links = len(u.links)
    return build_connectivity(
        u, cfg.model_bits, cfg.local_steps, cfg.bw_model, include_access_latency=not args.no_access_latency
    )


def _builders(args, default: str) -> list[str]:
    choice = args.overlay or default
    return list(BUILDER_NAMES) if choice == "all" else [choice]


def _overlays(args, default: str) -> dict[str, Overlay]:
    if args.overlay_file is not None:
        return {args.overlay_file.stem: read_overlay(args.overlay_file)}
    cg = _connectivity(args)
    return {name: BUILDERS[name](cg).overlay for name in _builders(args, default)}


def _suffixed(path: Path, name: str, many: bool) -> Path:
    return path.with_name(f"{path.stem}_{name}{path.suffix}") if many else path


def _circuit(nodes, ids) -> str:
    return " -> ".join(ids[i] for i in nodes)


def cmd_build(args) -> int:
    cg = _connectivity(args)
    names = _builders(args, "ring")
    for name in names:
        res = BUILDERS[name](cg)
        meta = {"builder": name, "tau_ms": res.tau, "underlay": cg.name}
        if args.out is None:
            print(json.dumps(overlay_to_dict(res.overlay, **meta), indent=2))
        else:
            path = _suffixed(args.out, name, len(names) > 1)
            write_overlay(res.overlay, path, **meta)
            print(f"{name}: tau = {res.tau:.6f} ms -> {path}")
    return 0


def cmd_cycle_time(args) -> int:
    for name, ov in _overlays(args, "ring").items():
        rep = evaluate(ov)
        print(f"{name}: tau = {rep.tau:.10g} ms  throughput = {rep.throughput:.6g} rounds/ms")
        print(f"  critical circuit: {_circuit(rep.critical_circuit.nodes, ov.silo_ids)}")
    return 0


def cmd_simulate(args) -> int:
    if args.rounds < 2:
        raise ToposynthError("--rounds must be >= 2")
    overlays = _overlays(args, "ring")
    for name, ov in overlays.items():
        trace = simulate(ov, args.rounds)
        tau = evaluate(ov).tau
        thr = empirical_throughput(trace)
        print(f"{name}: empirical throughput {thr:.6g} rounds/ms, 1/tau {1 / tau:.6g} rounds/ms")
        if args.out is not None:
            path = _suffixed(args.out, name, len(overlays) > 1)
            write_trace_csv(trace, path)
            print(f"  trace -> {path}")
    return 0


def compare(cg: ConnectivityGraph, names, links: int | None = None) -> ComparisonReport:
    """Run the requested builders; speedups are always relative to STAR."""
    results: dict[str, BuilderResult] = {name: BUILDERS[name](cg) for name in names}
    star = results["star"] if "star" in results else BUILDERS["star"](cg)
    if links is None:
        links = int(cg.allowed.sum()) // 2
    return ComparisonReport.from_results(results, star.tau, underlay=cg.name, n=cg.n, link_count=links)


def cmd_compare(args) -> int:
    cg = _connectivity(args)
    report = compare(cg, _builders(args, "all"), args.underlay_links)
    print(report.format_table())
    if args.out is not None:
        base = args.out.with_suffix("")
        report.write(base.with_suffix(".csv"), base.with_suffix(".json"))
        print(f"report -> {base.with_suffix('.csv')}, {base.with_suffix('.json')}")
    return 0


def cmd_train_toy(args) -> int:
    cg = _connectivity(args)
    rng = np.random.default_rng(args.seed)
    task = QuadraticTask.random(cg.n, args.dim, rng)
    names = _builders(args, "all")
    opt = task.global_loss(task.optimum())
    start = task.global_loss(np.zeros(task.dim))
    threshold = opt + args.loss_threshold * (start - opt)
    print(f"loss threshold {threshold:.6g} (optimum {opt:.6g})")
    for name in names:
        ov = BUILDERS[name](cg).overlay
        a = consensus_matrix(ov)
        train = dpasgd_run(
            task, a, args.local_steps, inverse_sqrt_schedule(args.lr), args.rounds, noise=args.noise, seed=args.seed, overlay=ov
        )
        trace = simulate(ov, args.rounds)
        series = loss_vs_time(train.loss, trace)
        hit = time_to_threshold(series, threshold)
        print(f"{name}: final loss {train.loss[-1]:.6g}, time to threshold {hit:.6g} ms")
        if args.out is not None:
            path = _suffixed(args.out, name, len(names) > 1)
            write_training_csv(train, trace, path)
            print(f"  series -> {path}")
    return 0


COMMANDS = {
    "build": cmd_build,
    "cycle-time": cmd_cycle_time,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "train-toy": cmd_train_toy,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ToposynthError, ValueError, OSError) as exc:
        print(f"toposynth {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
