"""Command-line entry point: ``analyze``, ``pendulum`` and ``random-study``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .numlin import DEFAULT_CONFIG


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparse-resilience", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="data-driven index of a trajectory dataset")
    a.add_argument("--x", required=True, type=Path, help="state CSV, T+1 rows x n columns")
    a.add_argument("--y", required=True, type=Path, help="output CSV, T rows x q columns")
    a.add_argument("--scenario", choices=["attack-free", "poisoned"], default="attack-free")
    a.add_argument("--assumed-l", type=int, default=None)
    a.add_argument("--rank-rtol", type=float, default=None)
    a.add_argument("--zero-atol", type=float, default=None)
    a.add_argument("--zero-rtol", type=float, default=None)
    a.add_argument("--eig-cluster-tol", type=float, default=None)
    a.add_argument("--emit", choices=["json", "text", "both"], default="both")
    a.add_argument("--out", type=Path, default=None, help="write report.json / summary.txt here")

    pend = sub.add_parser("pendulum", help="reproduce the pendulum case study")
    pend.add_argument("--out", type=Path, default=None)

    r = sub.add_parser("random-study", help="random-system sweep over q and l")
    r.add_argument("--n", type=int, default=25)
    r.add_argument("--q-min", type=int, default=10)
    r.add_argument("--q-max", type=int, default=20)
    r.add_argument("--trials", type=int, default=20)
    r.add_argument("--horizon", type=int, default=100)
    r.add_argument("--l", type=_int_list, default=(1, 2, 3))
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--rank-rtol", type=float, default=None)
    r.add_argument("--no-normalize", action="store_true",
                   help="simulate the raw Gaussian A instead of rescaling it to unit spectral radius")
    r.add_argument("--out", type=Path, default=None)
    return p


def _analyze(args) -> int:
    cfg = DEFAULT_CONFIG.replace(rank_rtol=args.rank_rtol, zero_atol=args.zero_atol,
                                 zero_rtol=args.zero_rtol, eig_cluster_tol=args.eig_cluster_tol)
    try:
        report = harness.analyze(args.x, args.y, args.scenario, args.assumed_l, cfg)
    except harness.IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_INGEST
    text_json = harness.report_to_json(report)
    summary = harness.summarize(report)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.emit in ("json", "both"):
            (args.out / "report.json").write_text(text_json + "\n", encoding="utf-8")
        if args.emit in ("text", "both"):
            (args.out / "summary.txt").write_text(summary + "\n", encoding="utf-8")
    else:
        if args.emit in ("json", "both"):
            print(text_json)
        if args.emit in ("text", "both"):
            print(summary)
    return harness.EXIT_RANK_DEFICIENT if report.rank_deficient else harness.EXIT_OK


def _pendulum(args) -> int:
    bundle = harness.run_pendulum(args.out)
    print(json.dumps({k: bundle[k] for k in ("delta_max", "rho_free", "rho_poisoned", "l_admissible")}))
    return harness.EXIT_OK


def _random_study(args) -> int:
    tol = harness.STUDY_CONFIG.replace(rank_rtol=args.rank_rtol)
    cfg = harness.ExperimentConfig(
        n=args.n, q_range=tuple(range(args.q_min, args.q_max + 1)), T=args.horizon,
        trials=args.trials, l_values=args.l, seed=args.seed, tolerances=tol,
        spectral_radius=None if args.no_normalize else 1.0,
        out_dir=None if args.out is None else str(args.out),
    )
    rows, agg = harness.run_random_study(cfg)
    print("q,l,trials,flagged,mean_delta_max,mean_rho_free,mean_rho_poisoned")
    for a in agg:
        print(f"{a['q']},{a['l']},{a['trials']},{a['flagged']},{a['mean_delta_max']:.3f},"
              f"{a['mean_rho_free']:.3f},{a['mean_rho_poisoned']:.3f}")
    return harness.EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"analyze": _analyze, "pendulum": _pendulum, "random-study": _random_study}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
