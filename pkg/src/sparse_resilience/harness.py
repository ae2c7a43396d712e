"""Trajectory ingestion, report persistence and the experiment drivers.

Exit codes used by the CLI: 0 success, 2 ingestion failure, 3 rank-deficient data.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datadriven import ResilienceReport, dispatch_rho_max
from .numlin import DEFAULT_CONFIG, NumericalConfig
from .oracle import sparse_obs_index_eig, sparse_obs_index_enum
from .sysmodel import (
    PENDULUM_ATTACKED_SENSOR,
    PENDULUM_X0,
    AttackSpec,
    Scenario,
    Strategy,
    build_data_matrices,
    inject_attack,
    pendulum_system,
    random_system,
    simulate,
)

log = logging.getLogger(__name__)

SCHEMA = "sparse-resilience/1"
EXIT_OK = 0
EXIT_INGEST = 2
EXIT_RANK_DEFICIENT = 3
THREADS_ENV = "SPARSE_RESILIENCE_THREADS"
STUDY_HEADER = ["q", "l", "trial", "delta_max", "rho_free", "rho_poisoned",
                "fast_path", "flagged", "wall_time_ms"]
# Random-system trajectories are far worse conditioned than the defaults assume.
STUDY_CONFIG = NumericalConfig(rank_rtol=1e-12)


class IngestError(Exception):
    """Base class for trajectory-file problems."""


class MalformedCSVError(IngestError):
    pass


class NonNumericCellError(IngestError):
    pass


class DimensionMismatchError(IngestError):
    pass


# -- ingestion ---------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix_csv(path) -> np.ndarray:
    """Read a numeric CSV (one row per time step), skipping a single header row if present."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedCSVError(f"{path}: cannot read ({exc})") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise MalformedCSVError(f"{path}: no data rows")
    width = len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise MalformedCSVError(f"{path}: data row {lineno} has {len(row)} cells, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_number(c))
            raise NonNumericCellError(f"{path}: data row {lineno} has non-numeric cell {bad!r}") from None
    out = np.array(values, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NonNumericCellError(f"{path}: non-finite values")
    return out


def ingest_trajectory(x_path, y_path) -> tuple[np.ndarray, np.ndarray]:
    """Load ``(states n x (T+1), outputs q x T)`` from row-per-step CSV files."""
    X = read_matrix_csv(x_path)
    Y = read_matrix_csv(y_path)
    if X.shape[0] != Y.shape[0] + 1:
        raise DimensionMismatchError(
            f"X has {X.shape[0]} rows and Y has {Y.shape[0]}; X needs exactly one more row"
        )
    return X.T, Y.T


def write_matrix_csv(path, M, header_prefix: str) -> None:
    """Write ``M`` (variables x time) as a row-per-step CSV with a header row."""
    M = np.atleast_2d(M)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"{header_prefix}{i}" for i in range(M.shape[0])])
        for row in M.T:
            w.writerow([repr(float(v)) for v in row])


# -- report serialization ----------------------------------------------------

def _c(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def report_to_dict(report: ResilienceReport) -> dict:
    witness = None
    if report.witness is not None:
        lam, z = report.witness
        witness = {"lambda": _c(lam), "z": [_c(v) for v in z]}
    return {
        "schema": SCHEMA,
        "scenario": report.scenario.value,
        "rho_max": report.rho_max,
        "n": report.n,
        "q": report.q,
        "T": report.T,
        "zeta_per_lambda": [{"lambda": _c(k), "zeta": v} for k, v in report.zeta_per_lambda.items()],
        "fast_path_used": report.fast_path_used,
        "path": report.path,
        "rank_deficient": report.rank_deficient,
        "assumed_l": report.assumed_l,
        "l_admissible": report.l_admissible,
        "witness": witness,
        "interpretation": {
            "detection_up_to": report.detection_budget,
            "estimation_up_to": report.estimation_budget,
        },
    }


def report_from_dict(d: dict) -> ResilienceReport:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {d.get('schema')!r}")
    witness = None
    if d["witness"] is not None:
        w = d["witness"]
        witness = (complex(*w["lambda"]), tuple(complex(*v) for v in w["z"]))
    return ResilienceReport(
        scenario=Scenario(d["scenario"]),
        rho_max=d["rho_max"],
        n=d["n"],
        q=d["q"],
        T=d["T"],
        zeta_per_lambda={complex(*e["lambda"]): e["zeta"] for e in d["zeta_per_lambda"]},
        fast_path_used=d["fast_path_used"],
        path=d["path"],
        rank_deficient=d["rank_deficient"],
        assumed_l=d["assumed_l"],
        l_admissible=d["l_admissible"],
        witness=witness,
    )


def report_to_json(report: ResilienceReport) -> str:
    return json.dumps(report_to_dict(report), indent=2)


def report_from_json(text: str) -> ResilienceReport:
    return report_from_dict(json.loads(text))


def summarize(report: ResilienceReport) -> str:
    lines = [f"scenario: {report.scenario.value}   n={report.n} q={report.q} T={report.T}"]
    if report.rank_deficient:
        lines.append("X- is rank deficient: the data are not informative for any rho.")
        return "\n".join(lines)
    lines.append(f"data-driven sparse observability index rho_max = {report.rho_max}")
    lines.append(f"path: {report.path}" + (" (all eigenvalues simple)" if report.fast_path_used else ""))
    for lam, zeta in report.zeta_per_lambda.items():
        lines.append(f"  zeta({lam.real:+.6f}{lam.imag:+.6f}j) = {zeta}")
    if report.rho_max < 0:
        lines.append("Some system consistent with the data is unobservable.")
    else:
        lines.append(f"attack detection guaranteed under up to {report.detection_budget} attacked sensors")
        lines.append(f"state estimation guaranteed under up to {report.estimation_budget} attacked sensors")
    if report.assumed_l is not None:
        verdict = "admissible" if report.l_admissible else "NOT admissible: the index cannot certify resilience"
        lines.append(f"assumed attack budget l = {report.assumed_l}: {verdict}")
    return "\n".join(lines)


# -- experiments ---------------------------------------------------------------

def analyze(x_path, y_path, scenario="attack_free", assumed_l=None,
            cfg: NumericalConfig = DEFAULT_CONFIG) -> ResilienceReport:
    states, outputs = ingest_trajectory(x_path, y_path)
    scenario = Scenario.parse(scenario)
    data = build_data_matrices(states, outputs, scenario)
    return dispatch_rho_max(data, scenario, assumed_l, cfg)


def run_pendulum(output_dir=None, T: int = 100, cfg: NumericalConfig = DEFAULT_CONFIG) -> dict:
    """Pendulum case study: oracle index, attack-free index, and index under a zeroing attack."""
    sys = pendulum_system()
    traj = simulate(sys, PENDULUM_X0, T)
    attack = AttackSpec({PENDULUM_ATTACKED_SENSOR}, budget=1, strategy=Strategy.ZEROING)
    poisoned, _ = inject_attack(traj, sys, attack)

    enum = sparse_obs_index_enum(sys, cfg)
    eig = sparse_obs_index_eig(sys, cfg)
    if enum.index != eig.index:
        raise RuntimeError(f"oracles disagree on the pendulum: {enum.index} vs {eig.index}")
    free = dispatch_rho_max(build_data_matrices(traj.states, traj.nominal_outputs), "attack_free", cfg=cfg)
    pois = dispatch_rho_max(build_data_matrices(traj.states, poisoned, "poisoned"), "poisoned", 1, cfg)

    bundle = {
        "schema": SCHEMA,
        "delta_max": enum.index,
        "rho_free": free.rho_max,
        "rho_poisoned": pois.rho_max,
        "assumed_l": 1,
        "l_admissible": pois.l_admissible,
        "reports": {"attack_free": report_to_dict(free), "poisoned": report_to_dict(pois)},
    }
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(out / "x.csv", traj.states, "x")
        write_matrix_csv(out / "y_clean.csv", traj.nominal_outputs, "y")
        write_matrix_csv(out / "y_poisoned.csv", poisoned, "y")
        (out / "pendulum.json").write_text(json.dumps(bundle, indent=2), encoding="utf-8")
    return bundle


@dataclass
class ExperimentConfig:
    """Parameters of the random-system study (and tolerance overrides for any mode)."""

    mode: str = "random_study"
    n: int = 25
    q_range: tuple[int, ...] = tuple(range(10, 21))
    T: int = 100
    trials: int = 20
    l_values: tuple[int, ...] = (1, 2, 3)
    strategy: str = "zeroing"
    seed: int = 0
    spectral_radius: float | None = 1.0
    tolerances: NumericalConfig = field(default_factory=lambda: STUDY_CONFIG)
    out_dir: str | None = None
    workers: int | None = None

    def __post_init__(self):
        self.q_range = tuple(self.q_range)
        self.l_values = tuple(self.l_values)
        if self.mode not in {"analyze", "pendulum", "random_study"}:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.q_range:
            raise ValueError("q_range must be nonempty")
        if self.T < self.n:
            raise ValueError(f"horizon T={self.T} must be at least n={self.n}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(l < 0 for l in self.l_values):
            raise ValueError("attack budgets must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.strategy != "zeroing":
            raise ValueError("the random study uses the zeroing attack only")


@dataclass(frozen=True)
class StudyRow:
    q: int
    l: int
    trial: int
    delta_max: int
    rho_free: int
    rho_poisoned: int
    fast_path: bool
    flagged: bool
    wall_time_ms: int

    def as_csv(self) -> list[str]:
        return [str(self.q), str(self.l), str(self.trial), str(self.delta_max), str(self.rho_free),
                str(self.rho_poisoned), str(int(self.fast_path)), str(int(self.flagged)),
                str(self.wall_time_ms)]


def _trial_seed(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master, *key])


def _run_trial(cfg: ExperimentConfig, q: int, trial: int) -> list[StudyRow]:
    # One system and trajectory per (q, trial), shared across l; supports depend on l too.
    start = time.perf_counter()
    sys_seed, x0_seed = _trial_seed(cfg.seed, q, trial).spawn(2)
    sys = random_system(cfg.n, q, np.random.default_rng(sys_seed), cfg.spectral_radius)
    x0 = np.random.default_rng(x0_seed).standard_normal(cfg.n)
    traj = simulate(sys, x0, cfg.T)
    tol = cfg.tolerances

    delta = sparse_obs_index_eig(sys, tol).index
    free = dispatch_rho_max(build_data_matrices(traj.states, traj.nominal_outputs), "attack_free", cfg=tol)
    shared_ms = (time.perf_counter() - start) * 1e3

    rows = []
    for l in cfg.l_values:
        t0 = time.perf_counter()
        rng = np.random.default_rng(_trial_seed(cfg.seed, q, trial, l, 1))
        support = rng.choice(q, size=min(l, q), replace=False)
        poisoned, _ = inject_attack(traj, sys, AttackSpec(support, budget=l))
        pois = dispatch_rho_max(build_data_matrices(traj.states, poisoned, "poisoned"), "poisoned", l, tol)
        ms = int(round(shared_ms + (time.perf_counter() - t0) * 1e3))
        rows.append(StudyRow(
            q=q, l=l, trial=trial, delta_max=delta, rho_free=free.rho_max, rho_poisoned=pois.rho_max,
            fast_path=free.fast_path_used and pois.fast_path_used,
            flagged=free.rank_deficient or pois.rank_deficient, wall_time_ms=ms,
        ))
    return rows


def _worker_count(requested: int | None) -> int:
    if requested is None:
        requested = int(os.environ.get(THREADS_ENV, "1") or 1)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def run_random_study(cfg: ExperimentConfig) -> tuple[list[StudyRow], list[dict]]:
    """Run every (q, trial) pair and return rows in canonical (q, l, trial) order plus aggregates."""
    jobs = [(q, t) for q in cfg.q_range for t in range(cfg.trials)]
    workers = _worker_count(cfg.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = [_run_trial(cfg, q, t) for q, t in jobs]
    rows = sorted((r for chunk in results for r in chunk), key=lambda r: (r.q, r.l, r.trial))
    agg = aggregate(rows)
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_study_csv(out / "study.csv", rows)
        write_aggregate_csv(out / "aggregate.csv", agg)
        log.info("wrote %d rows to %s", len(rows), out)
    return rows, agg


def aggregate(rows: list[StudyRow]) -> list[dict]:
    """Means per (q, l) over non-flagged rows; flagged trials are counted, not averaged."""
    groups: dict[tuple[int, int], list[StudyRow]] = {}
    for r in rows:
        groups.setdefault((r.q, r.l), []).append(r)
    out = []
    for (q, l), group in sorted(groups.items()):
        ok = [r for r in group if not r.flagged]

        def mean(attr):
            return float(np.mean([getattr(r, attr) for r in ok])) if ok else float("nan")

        out.append({
            "q": q, "l": l, "trials": len(group), "flagged": len(group) - len(ok),
            "mean_delta_max": mean("delta_max"), "mean_rho_free": mean("rho_free"),
            "mean_rho_poisoned": mean("rho_poisoned"),
        })
    return out


def write_study_csv(path, rows: list[StudyRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STUDY_HEADER)
        for r in rows:
            w.writerow(r.as_csv())


def read_study_csv(path) -> list[StudyRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [StudyRow(
            q=int(d["q"]), l=int(d["l"]), trial=int(d["trial"]), delta_max=int(d["delta_max"]),
            rho_free=int(d["rho_free"]), rho_poisoned=int(d["rho_poisoned"]),
            fast_path=d["fast_path"] == "1", flagged=d["flagged"] == "1",
            wall_time_ms=int(d["wall_time_ms"]),
        ) for d in reader]


def write_aggregate_csv(path, agg: list[dict]) -> None:
    if not agg:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(agg[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(agg)

