"""Experiment orchestration: config files, seeded runs, CSV and manifests.

A single JSON config describes one experiment: the environment, the
solver, its schedules, the iteration budget and a list of seeds.  Running
it produces one CSV of metric samples per seed plus a manifest echoing
the config with checksums.  CSV content is a pure function of
(config, seed): runs are safe to fan out across processes and to diff
byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .core import induce_flow
from .environments import (
    ENVIRONMENT_NAMES,
    EnvironmentParams,
    make_environment,
    make_linear_synthetic,
    _linear_kwargs,
)
from .metrics import ReferenceSolution
from .solvers import (
    RunRecord,
    Schedules,
    SolverConfig,
    constant,
    full_info_decay,
    solve_bandit,
    solve_fictitious_play,
    solve_full_info,
    solve_linear,
)

SCHEMA_VERSION = 1
CSV_HEADER = "iter,exploitability,kl_to_reference,wall_ms,seed"
SOLVERS = ("full_info", "bandit", "linear", "fictitious_play")
OUT_DIR_ENV_VAR = "GMFG_OUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentParams
    solver: str
    lam: float
    schedules: Schedules
    iterations: int
    record_every: int = 1
    seeds: tuple[int, ...] = (1,)
    out_dir: str | None = None
    reference_path: str | None = None

    def validate(self) -> None:
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; known: {SOLVERS}")
        if not self.seeds:
            raise ValueError("the seed list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.solver in ("bandit", "linear") and self.schedules.gamma is None:
            raise ValueError(f"solver {self.solver!r} needs a gamma schedule")
        if self.solver == "fictitious_play" and self.lam != 0.0:
            raise ValueError("fictitious_play runs unregularized (lam = 0)")
        if self.solver == "linear" and self.environment.name != "linear_synthetic":
            raise ValueError("the linear solver needs the linear_synthetic environment")
        if self.environment.name not in ENVIRONMENT_NAMES:
            raise ValueError(f"unknown environment {self.environment.name!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "environment": self.environment.to_dict(),
            "solver": self.solver,
            "lam": self.lam,
            "schedules": self.schedules.to_dict(),
            "iterations": self.iterations,
            "record_every": self.record_every,
            "seeds": list(self.seeds),
            "out_dir": self.out_dir,
            "reference_path": self.reference_path,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        return cls(
            environment=EnvironmentParams.from_dict(data["environment"]),
            solver=data["solver"],
            lam=float(data["lam"]),
            schedules=Schedules.from_dict(data["schedules"]),
            iterations=int(data["iterations"]),
            record_every=int(data.get("record_every", 1)),
            seeds=tuple(int(s) for s in data["seeds"]),
            out_dir=data.get("out_dir"),
            reference_path=data.get("reference_path"),
        )


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "config": config.to_dict()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_config(path: str | Path) -> ExperimentConfig:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported config schema_version {version!r}")
    return ExperimentConfig.from_dict(payload["config"])


def resolve_out_dir(
    cli_value: str | None, config: ExperimentConfig
) -> Path:
    """CLI flag wins, then the config, then $GMFG_OUT_DIR, then ./runs."""
    for candidate in (cli_value, config.out_dir, os.environ.get(OUT_DIR_ENV_VAR)):
        if candidate:
            return Path(candidate)
    return Path("runs")


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def records_to_csv(records: list[RunRecord]) -> str:
    """Render records with full precision; LF endings, '.' decimals."""
    lines = [CSV_HEADER]
    last = 0
    for rec in records:
        if rec.iteration <= last:
            raise ValueError("record iterations must be strictly increasing")
        last = rec.iteration
        kl = "" if rec.kl_to_reference is None else _format_float(rec.kl_to_reference)
        lines.append(
            f"{rec.iteration},{_format_float(rec.exploitability)},{kl},"
            f"{rec.wall_ms},{rec.seed}"
        )
    return "\n".join(lines) + "\n"


def _build_model(env: EnvironmentParams):
    """Returns (model, linear_spec-or-None)."""
    if env.name == "linear_synthetic":
        return make_linear_synthetic(**_linear_kwargs(env))
    return make_environment(env), None


def run_single(config: ExperimentConfig, seed: int) -> list[RunRecord]:
    """Execute one seed of an experiment and return its record stream."""
    model, linear_spec = _build_model(config.environment)
    reference = None
    if config.reference_path:
        reference = load_reference(config.reference_path, model=model)
    solver_config = SolverConfig(
        lam=config.lam,
        schedules=config.schedules,
        iterations=config.iterations,
        seed=seed,
        record_every=config.record_every,
        reference=reference,
    )
    if config.solver == "full_info":
        _, records = solve_full_info(model, solver_config)
    elif config.solver == "bandit":
        _, records = solve_bandit(model, solver_config)
    elif config.solver == "linear":
        _, records = solve_linear(model, linear_spec, solver_config)
    elif config.solver == "fictitious_play":
        _, records = solve_fictitious_play(model, solver_config)
    else:
        raise ValueError(f"unknown solver {config.solver!r}")
    return records


def _run_single_payload(payload: dict[str, Any], seed: int) -> tuple[int, list[RunRecord]]:
    # Process-pool entry point: reconstruct the config in the worker so
    # nothing capturing closures crosses the process boundary.
    config = ExperimentConfig.from_dict(payload)
    return seed, run_single(config, seed)


def run_experiment(
    config: ExperimentConfig,
    jobs: int | None = None,
    out_dir: str | None = None,
) -> dict[str, Any]:
    """Run every seed, write one CSV each plus a manifest; return the manifest."""
    config.validate()
    target = resolve_out_dir(out_dir, config)
    target.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    workers = jobs if jobs is not None else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(config.seeds)))
    results: dict[int, list[RunRecord]] = {}
    if workers == 1 or len(config.seeds) == 1:
        for seed in config.seeds:
            results[seed] = run_single(config, seed)
    else:
        payload = config.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_single_payload, payload, seed)
                for seed in config.seeds
            ]
            for future in futures:
                seed, records = future.result()
                results[seed] = records
    duration_ms = int((time.perf_counter() - t0) * 1000)
    runs = []
    for seed in config.seeds:
        csv_text = records_to_csv(results[seed])
        csv_name = f"seed_{seed}.csv"
        csv_path = target / csv_name
        csv_path.write_bytes(csv_text.encode("utf-8"))
        runs.append(
            {
                "seed": seed,
                "csv": csv_name,
                "sha256": hashlib.sha256(csv_text.encode("utf-8")).hexdigest(),
                "rows": len(results[seed]),
            }
        )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "duration_ms": duration_ms,
        "runs": runs,
    }
    (target / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def build_reference(config: ExperimentConfig) -> ReferenceSolution:
    """Produce an equilibrium surrogate with a long full-information run."""
    config.validate()
    if config.solver != "full_info":
        raise ValueError("references are built with the full_info solver")
    if config.lam <= 0:
        raise ValueError("references need lam > 0 (unique regularized equilibrium)")
    model, _ = _build_model(config.environment)
    seed = config.seeds[0]
    solver_config = SolverConfig(
        lam=config.lam,
        schedules=config.schedules,
        iterations=config.iterations,
        seed=seed,
        record_every=0,
    )
    policy, _ = solve_full_info(model, solver_config)
    flow, _ = induce_flow(model, policy)
    provenance = {
        "solver": "full_info",
        "iterations": config.iterations,
        "lam": config.lam,
        "seed": seed,
        "environment": config.environment.to_dict(),
    }
    return ReferenceSolution(policy=policy, flow=flow, provenance=provenance)


def save_reference(reference: ReferenceSolution, path: str | Path) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **reference.to_dict()}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_reference(path: str | Path, model=None) -> ReferenceSolution:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported reference schema_version {version!r}")
    reference = ReferenceSolution.from_dict(payload)
    if model is not None:
        reference.check_consistent(model)
    return reference


def _paper_protocol(env_name: str, lam: float = 0.05) -> ExperimentConfig:
    # Shared experimental protocol: flat eta = gamma = 0.1, five seeds.
    return ExperimentConfig(
        environment=EnvironmentParams(name=env_name),
        solver="bandit",
        lam=lam,
        schedules=Schedules(eta=constant(0.1), gamma=constant(0.1)),
        iterations=2000,
        record_every=10,
        seeds=(1, 2, 3, 4, 5),
    )


def _smoke() -> ExperimentConfig:
    return ExperimentConfig(
        environment=EnvironmentParams(name="beach_bar"),
        solver="full_info",
        lam=0.5,
        schedules=full_info_decay(0.5),
        iterations=10,
        record_every=1,
        seeds=(1,),
    )


def _smoke_bandit() -> ExperimentConfig:
    return replace(
        _paper_protocol("beach_bar"), iterations=30, record_every=5, seeds=(1, 2)
    )


PRESETS = {
    "smoke": _smoke,
    "smoke-bandit": _smoke_bandit,
    "paper-beach-bar": lambda: _paper_protocol("beach_bar"),
    "paper-crowd-avoidance": lambda: _paper_protocol("crowd_avoidance"),
    "paper-predator-prey": lambda: _paper_protocol("predator_prey"),
    "paper-periodic-aversion": lambda: _paper_protocol("periodic_aversion"),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return PRESETS[name]()
