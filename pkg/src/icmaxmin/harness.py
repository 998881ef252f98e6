"""Monte-Carlo experiment driver: drops, scheme execution, goodput accounting.

Per drop the true channels are realized, an error grid is sampled (boundary
of the uncertainty ball by default, the harshest admissible realization), and
every scheme designs from the resulting estimates.  Streams are scheduled at
the rate the transmitter believes in (nominal SINR at the estimates) and paid
only when the realized mutual information covers it:

    goodput = r * 1{r <= C}.

Everything downstream of the config and master seed is deterministic,
including the CSV byte stream; drops run in parallel across a process pool
capped by the ``IC_MAXMIN_THREADS`` environment variable.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .ao import AoConfig, solve_max_min
from .baselines import ia3_closed_form, max_sinr_baseline, min_leakage_baseline
from .errors import IcMaxMinError
from .model import SystemDims, derive_csi, generate_channels, sample_delta
from .sinr import StreamId, actual_sinr, mutual_info, worst_case_sinr

SCHEMES = ("Proposed", "IA3", "MaxSinr", "MinLeakage")

CSV_COLUMNS = (
    "scheme",
    "snr_db",
    "eps",
    "drop",
    "k",
    "l",
    "r",
    "C",
    "goodput",
    "worst_user_rate",
    "sum_rate",
    "ao_iters",
    "cert_ok",
)

ENV_THREADS = "IC_MAXMIN_THREADS"


class ConfigError(IcMaxMinError):
    """Experiment configuration is malformed; message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment description; mirrors the JSON config file keys."""

    k: int
    m: int
    n: int
    l: int
    snr_db: tuple
    eps: tuple
    drops: int
    schemes: tuple = SCHEMES
    seed: int = 0
    out: Optional[str] = None
    n0: float = 1.0
    delta_mode: str = "boundary"
    schedule: str = "nominal"
    ao_max_iters: int = 50
    ao_rel_tol: float = 1e-5
    ao_init_mode: str = "right-singular"
    baseline_iters: int = 50
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.drops < 1:
            raise ConfigError("drops: must be at least 1")
        if not self.snr_db:
            raise ConfigError("snr_db: must be non-empty")
        if not self.eps:
            raise ConfigError("eps: must be non-empty")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"schemes: unknown entries {unknown}; valid: {list(SCHEMES)}")
        if self.schedule not in ("nominal", "worst-case"):
            raise ConfigError(f"schedule: must be 'nominal' or 'worst-case', got {self.schedule!r}")
        if self.delta_mode not in ("boundary", "interior"):
            raise ConfigError(
                f"delta_mode: must be 'boundary' or 'interior', got {self.delta_mode!r}"
            )

    def dims_for(self, snr_db: float, eps: float) -> SystemDims:
        """All users share the power P = N0 * 10^(SNR/10)."""
        power = self.n0 * 10.0 ** (snr_db / 10.0)
        return SystemDims(
            K=self.k, M=self.m, N=self.n, L=self.l, P=power, N0=self.n0, eps=eps
        )


_CONFIG_KEYS = {
    "k": int,
    "m": int,
    "n": int,
    "l": int,
    "snr_db": list,
    "eps": list,
    "drops": int,
    "schemes": list,
    "seed": int,
    "out": str,
    "n0": float,
    "delta_mode": str,
    "schedule": str,
    "ao_max_iters": int,
    "ao_rel_tol": float,
    "ao_init_mode": str,
    "baseline_iters": int,
    "workers": int,
}

_REQUIRED_KEYS = ("k", "m", "n", "l", "snr_db", "eps", "drops")


def config_from_json(text: str) -> ExperimentConfig:
    """Parse a config document with per-field diagnostics."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = sorted(set(doc) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    missing = [key for key in _REQUIRED_KEYS if key not in doc]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")
    kwargs = {}
    for key, value in doc.items():
        expect = _CONFIG_KEYS[key]
        if expect in (int, float):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{key}: expected a number, got {value!r}")
            value = expect(value)
        elif expect is list and not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        elif expect is str and value is not None and not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))


def config_from_file(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_json(fh.read())


@dataclass
class StreamRate:
    k: int
    l: int
    r: float
    C: float

    @property
    def goodput(self) -> float:
        return self.r if self.r <= self.C else 0.0


@dataclass
class DropRecord:
    """Per (drop, scheme, SNR, eps) outcome with per-stream rate accounting."""

    drop: int
    scheme: str
    snr_db: float
    eps: float
    streams: list = field(default_factory=list)
    ao_iters: int = 0
    cert_ok: bool = True
    failed: bool = False
    failure: str = ""
    trace_jsonl: str = ""

    @property
    def worst_user_rate(self) -> float:
        if not self.streams:
            return 0.0
        per_user = {}
        for sr in self.streams:
            per_user[sr.k] = per_user.get(sr.k, 0.0) + sr.goodput
        return min(per_user.values())

    @property
    def sum_rate(self) -> float:
        return sum(sr.goodput for sr in self.streams)


def _design(scheme: str, csi, dims: SystemDims, cfg: ExperimentConfig, drop: int):
    """Run one scheme; returns (tx, ao_iters, cert_ok, trace_jsonl)."""
    scheme_seed = cfg.seed * 1_000_003 + drop
    if scheme == "Proposed":
        ao_cfg = AoConfig(
            max_iters=cfg.ao_max_iters,
            rel_tol=cfg.ao_rel_tol,
            init_mode=cfg.ao_init_mode,
            seed=scheme_seed,
        )
        tx, trace = solve_max_min(csi, dims, ao_cfg)
        cert_ok = all(
            rec.cert.get("max_ratio", 0.0) <= 1e-6 and not rec.warnings
            for rec in trace.iterations
        )
        return tx, len(trace.iterations), cert_ok, trace.to_jsonl()
    if scheme == "IA3":
        return ia3_closed_form(csi, dims), 0, True, ""
    if scheme == "MaxSinr":
        return max_sinr_baseline(csi, dims, iters=cfg.baseline_iters, seed=scheme_seed), 0, True, ""
    if scheme == "MinLeakage":
        return (
            min_leakage_baseline(csi, dims, iters=cfg.baseline_iters, seed=scheme_seed),
            0,
            True,
            "",
        )
    raise ConfigError(f"schemes: unknown scheme {scheme!r}")


def run_drop(cfg: ExperimentConfig, drop: int) -> list:
    """All records for one channel realization across the (eps, SNR, scheme) grid.

    The same true channels and error directions are reused across the sweep
    (common random numbers); per-scheme failures are recorded, never raised.
    """
    records = []
    drop_seed = [cfg.seed, drop]
    for eps in cfg.eps:
        for snr_db in cfg.snr_db:
            dims = cfg.dims_for(snr_db, eps)
            channels = generate_channels(dims, drop_seed)
            delta = sample_delta(dims, drop_seed, mode=cfg.delta_mode)
            csi = derive_csi(channels, delta, eps)
            for scheme in cfg.schemes:
                rec = DropRecord(drop=drop, scheme=scheme, snr_db=snr_db, eps=eps)
                try:
                    tx, ao_iters, cert_ok, trace = _design(scheme, csi, dims, cfg, drop)
                    rec.ao_iters = ao_iters
                    rec.cert_ok = cert_ok
                    rec.trace_jsonl = trace
                    for k in range(dims.K):
                        for l in range(dims.L[k]):
                            s = StreamId(k, l)
                            if cfg.schedule == "nominal":
                                sched_sinr = actual_sinr(csi.Hhat, tx, s, dims.N0)
                            else:
                                sched_sinr = max(worst_case_sinr(csi, tx, s, dims.N0), 0.0)
                            r = mutual_info(sched_sinr)
                            cap = mutual_info(actual_sinr(channels, tx, s, dims.N0))
                            rec.streams.append(StreamRate(k=k, l=l, r=r, C=cap))
                except IcMaxMinError as exc:
                    rec.failed = True
                    rec.failure = f"{type(exc).__name__}: {exc}"
                    rec.streams = []
                    rec.cert_ok = False
                records.append(rec)
    return records


@dataclass(frozen=True)
class AggregateRow:
    scheme: str
    snr_db: float
    eps: float
    drops: int
    mean_worst: float
    se_worst: float
    mean_sum: float
    se_sum: float
    mean_ao_iters: float
    failures: int
    cert_ok: bool


def aggregate(records: list) -> list:
    """Reduce drop records to per-(scheme, SNR, eps) means and standard errors.

    Failed designs contribute zero rate (no service delivered) and are
    counted.  The reduction is order-invariant.
    """
    if not records:
        raise ValueError("no records to aggregate")
    groups = {}
    for rec in records:
        groups.setdefault((rec.scheme, rec.snr_db, rec.eps), []).append(rec)
    rows = []
    for (scheme, snr_db, eps), group in sorted(groups.items()):
        group = sorted(group, key=lambda rec: rec.drop)
        worst = np.array([rec.worst_user_rate for rec in group])
        total = np.array([rec.sum_rate for rec in group])
        iters = np.array([rec.ao_iters for rec in group], dtype=float)
        n = len(group)

        def se(values: np.ndarray) -> float:
            if n < 2:
                return 0.0
            return float(np.std(values, ddof=1) / np.sqrt(n))

        rows.append(
            AggregateRow(
                scheme=scheme,
                snr_db=snr_db,
                eps=eps,
                drops=n,
                mean_worst=float(worst.mean()),
                se_worst=se(worst),
                mean_sum=float(total.mean()),
                se_sum=se(total),
                mean_ao_iters=float(iters.mean()),
                failures=sum(rec.failed for rec in group),
                cert_ok=all(rec.cert_ok for rec in group),
            )
        )
    return rows


def _worker_count(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{ENV_THREADS}: expected an integer, got {env!r}")
    return max(1, min(os.cpu_count() or 1, cfg.drops))


def run_experiment(cfg: ExperimentConfig):
    """Execute the full grid; returns ``(records, aggregate rows)``.

    Records come back sorted by (eps, snr, drop, scheme) regardless of worker
    completion order, so the whole experiment is a pure function of
    ``(config, seed)``.
    """
    workers = _worker_count(cfg)
    if workers == 1 or cfg.drops == 1:
        nested = [run_drop(cfg, d) for d in range(cfg.drops)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(run_drop, [cfg] * cfg.drops, range(cfg.drops)))
    records = [rec for drop_records in nested for rec in drop_records]
    records.sort(key=lambda r: (r.eps, r.snr_db, r.drop, SCHEMES.index(r.scheme)))
    return records, aggregate(records)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def records_to_csv(records: list, rows: Optional[list] = None) -> str:
    """Flat CSV: one row per (drop, scheme, stream), 1-based stream labels,
    plus aggregate rows flagged by ``k = l = 0``."""
    rows = rows if rows is not None else aggregate(records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        for sr in rec.streams:
            writer.writerow(
                [
                    rec.scheme,
                    _fmt(rec.snr_db),
                    _fmt(rec.eps),
                    rec.drop + 1,
                    sr.k + 1,
                    sr.l + 1,
                    _fmt(sr.r),
                    _fmt(sr.C),
                    _fmt(sr.goodput),
                    _fmt(rec.worst_user_rate),
                    _fmt(rec.sum_rate),
                    rec.ao_iters,
                    _fmt(rec.cert_ok and not rec.failed),
                ]
            )
    for row in rows:
        writer.writerow(
            [
                row.scheme,
                _fmt(row.snr_db),
                _fmt(row.eps),
                0,
                0,
                0,
                "",
                "",
                "",
                _fmt(row.mean_worst),
                _fmt(row.mean_sum),
                _fmt(row.mean_ao_iters),
                _fmt(row.cert_ok),
            ]
        )
    return buf.getvalue()


def traces_to_jsonl(records: list) -> str:
    """Convergence traces of the iterative design, one JSON object per line,
    tagged with drop coordinates."""
    lines = []
    for rec in records:
        if not rec.trace_jsonl:
            continue
        for line in rec.trace_jsonl.splitlines():
            doc = json.loads(line)
            doc.update(
                {"drop": rec.drop + 1, "scheme": rec.scheme, "snr_db": rec.snr_db, "eps": rec.eps}
            )
            lines.append(json.dumps(doc))
    return "\n".join(lines) + ("\n" if lines else "")


def write_outputs(cfg: ExperimentConfig, records: list, rows: list) -> list:
    """Write ``<out>.csv`` and ``<out>.traces.jsonl``; returns the paths."""
    if not cfg.out:
        raise ConfigError("out: no output path configured")
    base = cfg.out
    csv_path = base + ".csv"
    jsonl_path = base + ".traces.jsonl"
    os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records, rows))
    with open(jsonl_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(traces_to_jsonl(records))
    return [csv_path, jsonl_path]
