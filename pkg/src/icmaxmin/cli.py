"""Command-line front end: experiment runs, sweeps, validation, debug dumps."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import acceptance
from .ao import AoConfig, initialize
from .errors import IcMaxMinError
from .harness import (
    ExperimentConfig,
    SCHEMES,
    config_from_file,
    run_experiment,
    write_outputs,
)
from .model import derive_csi, generate_channels, sample_delta
from .precoder import _assemble_sdp, build_qv
from .sdp import problem_to_json
from .sinr import min_worst_case_sinr


def _floats(text: str) -> list:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _add_sweep_args(sub, snr_default: str, eps_default: str):
    sub.add_argument("--k", type=int, default=3)
    sub.add_argument("--m", type=int, default=4)
    sub.add_argument("--n", type=int, default=4)
    sub.add_argument("--l", type=int, default=2)
    sub.add_argument("--snr-db", type=_floats, default=_floats(snr_default))
    sub.add_argument("--eps", type=_floats, default=_floats(eps_default))
    sub.add_argument("--drops", type=int, default=50)
    sub.add_argument("--schemes", default=",".join(SCHEMES))
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output path stem (.csv / .traces.jsonl)")
    sub.add_argument("--delta-mode", choices=["boundary", "interior"], default="boundary")
    sub.add_argument("--schedule", choices=["nominal", "worst-case"], default="nominal")
    sub.add_argument("--workers", type=int, default=None)


def _run_config(cfg: ExperimentConfig) -> int:
    records, rows = run_experiment(cfg)
    paths = write_outputs(cfg, records, rows)
    for row in rows:
        print(
            f"{row.scheme:<11} snr={row.snr_db:g} eps={row.eps:g} "
            f"worst={row.mean_worst:.4f} sum={row.mean_sum:.4f} failures={row.failures}"
        )
    for path in paths:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="icmaxmin",
        description="Robust max-min transceiver design simulator for MIMO interference channels",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute an experiment config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="override the config output stem")
    p_run.add_argument("--workers", type=int, default=None)

    p_snr = subs.add_parser("sweep-snr", help="rate-versus-SNR sweep")
    _add_sweep_args(p_snr, snr_default="5,10,15,20", eps_default="0.1")

    p_eps = subs.add_parser("sweep-eps", help="rate-versus-error-radius sweep")
    _add_sweep_args(p_eps, snr_default="18", eps_default="0.02,0.05,0.1,0.15")

    p_val = subs.add_parser("validate", help="run the acceptance criteria")
    p_val.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p_val.add_argument(
        "--quick",
        action="store_true",
        help="reduced sample counts (informational smoke run, not the gate)",
    )

    p_dump = subs.add_parser("dump-sdp", help="emit a debug precoder-step instance as JSON")
    p_dump.add_argument("--k", type=int, default=2)
    p_dump.add_argument("--m", type=int, default=2)
    p_dump.add_argument("--n", type=int, default=2)
    p_dump.add_argument("--l", type=int, default=1)
    p_dump.add_argument("--eps", type=float, default=0.1)
    p_dump.add_argument("--snr-db", type=float, default=10.0)
    p_dump.add_argument("--seed", type=int, default=0)
    p_dump.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = config_from_file(args.config)
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
            if args.out is not None:
                overrides["out"] = args.out
            if args.workers is not None:
                overrides["workers"] = args.workers
            if overrides:
                from dataclasses import replace

                cfg = replace(cfg, **overrides)
            return _run_config(cfg)

        if args.command in ("sweep-snr", "sweep-eps"):
            cfg = ExperimentConfig(
                k=args.k,
                m=args.m,
                n=args.n,
                l=args.l,
                snr_db=args.snr_db,
                eps=args.eps,
                drops=args.drops,
                schemes=tuple(s for s in args.schemes.split(",") if s),
                seed=args.seed,
                out=args.out,
                delta_mode=args.delta_mode,
                schedule=args.schedule,
                workers=args.workers,
            )
            return _run_config(cfg)

        if args.command == "validate":
            only = None
            if args.only:
                only = [int(tok) for tok in args.only.split(",") if tok]
            results = acceptance.run_criteria(only=only, quick=args.quick)
            failed = [res for res in results if not res.passed]
            return 1 if failed else 0

        if args.command == "dump-sdp":
            dims = ExperimentConfig(
                k=args.k, m=args.m, n=args.n, l=args.l,
                snr_db=[args.snr_db], eps=[args.eps], drops=1,
            ).dims_for(args.snr_db, args.eps)
            channels = generate_channels(dims, args.seed)
            delta = sample_delta(dims, args.seed, mode="boundary")
            csi = derive_csi(channels, delta, args.eps)
            tx = initialize(dims, csi, AoConfig(seed=args.seed))
            gamma, _ = min_worst_case_sinr(csi, tx, dims.N0)
            if gamma <= 0:
                print("error: operating point has non-positive worst-case SINR", file=sys.stderr)
                return 1
            inst = build_qv(csi, tx.U, gamma, dims)
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(problem_to_json(_assemble_sdp(inst, dims)))
            print(f"wrote {args.out} (target SINR {gamma:.6g})")
            return 0
    except IcMaxMinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
