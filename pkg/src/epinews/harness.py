"""Scenario configuration, seeded execution, sweeps, injection runs."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import multiprocessing
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .agents import (
    DEFAULT_PERIODS,
    RECOMMENDERS,
    STRATEGIES,
    AgentParams,
    World,
    build_population,
)
from .engine import DecayParams, SimilarityParams
from .metrics import windowed_approval_fraction

APPROVAL_WINDOW = 10
#: Trailing window used for "equilibrium" summary values.
EQUILIBRIUM_WINDOW = 100


class ConfigError(ValueError):
    """Invalid scenario configuration; `errors` lists field-level problems."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))


@dataclass(frozen=True)
class InjectionSpec:
    """From `step` on, the next `count` submitted news take `quality`."""

    count: int
    step: int
    quality: float


@dataclass(frozen=True)
class ScenarioConfig:
    dim: int = 16
    ones: int = 6
    users: int | None = None
    authorities: int = 10
    p_active: float = 0.02
    p_submit: float = 0.01
    reads: int = 3
    threshold: float = 3.0
    theta: float = 1.0
    epsilon: float = 0.001
    strategy: str = "optimal"
    period: int | None = None
    queue_threshold: int = 10
    decay: float = 0.1
    noise: float = 0.0
    recommender: str = "adaptive"
    steps: int = 1000
    repetitions: int = 1
    seed: int = 1
    injection: InjectionSpec | None = None
    p_active_overrides: dict[int, float] | None = None
    noise_overrides: dict[int, float] | None = None

    def effective_users(self) -> int:
        return self.users if self.users is not None else math.comb(self.dim, self.ones)

    def effective_period(self) -> int:
        return self.period if self.period is not None else DEFAULT_PERIODS[self.strategy]

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.injection is not None:
            d["injection"] = asdict(self.injection)
        return d


# Accepted both as config keys and as sweep-axis / CLI names.
FIELD_ALIASES = {
    "q": "queue_threshold",
    "lambda": "decay",
    "delta": "threshold",
    "x": "noise",
}

_FIELD_NAMES = {f for f in ScenarioConfig.__dataclass_fields__}


def canonical_field(name: str) -> str:
    resolved = FIELD_ALIASES.get(name, name)
    if resolved not in _FIELD_NAMES:
        raise ConfigError([f"{name}: unknown parameter"])
    return resolved


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from JSON-style data; unknown keys are rejected."""
    errors: list[str] = []
    kwargs: dict = {}
    for key, value in data.items():
        try:
            fname = canonical_field(key)
        except ConfigError:
            errors.append(f"{key}: unknown field")
            continue
        if fname == "injection" and value is not None:
            try:
                value = InjectionSpec(**value)
            except TypeError:
                errors.append("injection: expected {count, step, quality}")
                continue
        if fname in ("p_active_overrides", "noise_overrides") and value is not None:
            value = {int(k): float(v) for k, v in value.items()}
        kwargs[fname] = value
    if errors:
        raise ConfigError(errors)
    config = ScenarioConfig(**kwargs)
    validate_config(config)
    return config


def validate_config(config: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` naming every invalid field."""
    errors: list[str] = []
    c = config
    if c.dim <= 0:
        errors.append("dim: must be positive")
    if not 0 < c.ones < max(c.dim, 1):
        errors.append("ones: need 0 < ones < dim")
    if not errors:
        total = math.comb(c.dim, c.ones)
        users = c.users if c.users is not None else total
        if c.users is not None and c.users > total:
            errors.append(f"users: exceeds the {total} distinct taste vectors")
        elif users < 2:
            errors.append("users: need at least 2 users")
        elif not 0 < c.authorities < users:
            errors.append("authorities: need 0 < authorities < users")
    for name in ("p_active", "p_submit"):
        v = getattr(c, name)
        if not 0.0 <= v <= 1.0:
            errors.append(f"{name}: must be in [0, 1]")
    if c.reads < 0:
        errors.append("reads: must be >= 0")
    if c.theta < 0:
        errors.append("theta: must be >= 0")
    if not 0.0 < c.epsilon < 1.0:
        errors.append("epsilon: must be in (0, 1)")
    if c.strategy not in STRATEGIES:
        errors.append(f"strategy: must be one of {STRATEGIES}")
    if c.period is not None and c.period < 1:
        errors.append("period: must be >= 1")
    if c.queue_threshold < 0:
        errors.append("queue_threshold: must be >= 0")
    if c.decay < 0:
        errors.append("decay: must be >= 0")
    if c.noise < 0:
        errors.append("noise: must be >= 0")
    if c.recommender not in RECOMMENDERS:
        errors.append(f"recommender: must be one of {RECOMMENDERS}")
    if c.steps < 0:
        errors.append("steps: must be >= 0")
    if c.repetitions < 1:
        errors.append("repetitions: must be >= 1")
    if c.injection is not None:
        inj = c.injection
        if inj.count < 0:
            errors.append("injection.count: must be >= 0")
        if not 0 <= inj.step < max(c.steps, 1):
            errors.append("injection.step: must lie before the final step")
        if inj.quality <= 0:
            errors.append("injection.quality: must be positive")
    if errors:
        raise ConfigError(errors)


def config_hash(config: ScenarioConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def derive_seed(master_seed: int, cell: int, rep: int) -> int:
    """Stable per-(cell, repetition) seed, independent of execution order."""
    digest = hashlib.sha256(f"epinews:{master_seed}:{cell}:{rep}".encode()).digest()
    return int.from_bytes(digest[:16], "little")


def build_world(config: ScenarioConfig, rng: np.random.Generator,
                record_events: bool = False) -> World:
    validate_config(config)
    tastes = build_population(config.dim, config.ones, config.users, rng)
    injection = None
    if config.injection is not None and config.injection.count > 0:
        injection = (config.injection.count, config.injection.step,
                     config.injection.quality)
    return World(
        tastes,
        rng,
        agent_params=AgentParams(
            p_active=config.p_active,
            p_submit=config.p_submit,
            reads=config.reads,
            threshold=config.threshold,
            noise=config.noise,
            p_active_overrides=config.p_active_overrides,
            noise_overrides=config.noise_overrides,
        ),
        sim_params=SimilarityParams(theta=config.theta, epsilon=config.epsilon),
        decay_params=DecayParams(queue_threshold=config.queue_threshold,
                                 decay=config.decay),
        n_authorities=config.authorities,
        strategy=config.strategy,
        rewire_period=config.effective_period(),
        recommender=config.recommender,
        injection=injection,
        record_events=record_events,
    )


@dataclass
class StepMetrics:
    step: int
    approvals: int
    assessments: int
    approval_fraction: float | None
    approval_fraction_w10: float | None
    excess_differences: float
    mean_queue_len: float
    tagged_readers: list[int] = field(default_factory=list)


@dataclass
class RunRecord:
    rep: int
    seed: int
    config_hash: str
    rows: list[StepMetrics]
    tagged_ids: list[int]
    summary: dict


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list[RunRecord]
    mean_rows: list[StepMetrics]
    mean_summary: dict


def _network_summary(world: World) -> dict:
    follower_counts = np.bincount(world.state.network.matrix.ravel(),
                                  minlength=world.n_users)
    return {
        "followers_min": int(follower_counts.min()),
        "followers_mean": float(follower_counts.mean()),
        "followers_max": int(follower_counts.max()),
        "total_news": world.n_news,
        "total_votes": world.state.ledger.n_votes,
    }


def run_single(config: ScenarioConfig, cell: int = 0, rep: int = 0) -> RunRecord:
    """Execute one repetition under its derived seed."""
    seed = derive_seed(config.seed, cell, rep)
    rng = np.random.default_rng(seed)
    world = build_world(config, rng)

    tallies = [world.step() for _ in range(config.steps)]
    approvals = [t.approvals for t in tallies]
    assessments = [t.assessments for t in tallies]
    w10 = windowed_approval_fraction(approvals, assessments, APPROVAL_WINDOW)
    tagged = world.tagged_ids
    rows = []
    for t, tally in enumerate(tallies):
        frac = tally.approvals / tally.assessments if tally.assessments else None
        rows.append(StepMetrics(
            step=tally.step,
            approvals=tally.approvals,
            assessments=tally.assessments,
            approval_fraction=frac,
            approval_fraction_w10=w10[t],
            excess_differences=tally.excess_differences,
            mean_queue_len=tally.mean_queue_len,
            tagged_readers=[tally.tagged_readers.get(nid, 0) for nid in tagged],
        ))

    eq_window = min(EQUILIBRIUM_WINDOW, config.steps)
    eq_assess = sum(assessments[-eq_window:]) if eq_window else 0
    summary = {
        "final_excess_differences": (rows[-1].excess_differences if rows
                                     else world.excess_differences()),
        "equilibrium_approval_fraction": (
            sum(approvals[-eq_window:]) / eq_assess if eq_assess else None),
        "total_approvals": sum(approvals),
        "total_assessments": sum(assessments),
        "tagged_total_readers": int(sum(sum(r.tagged_readers) for r in rows)),
    }
    summary.update(_network_summary(world))
    return RunRecord(rep=rep, seed=seed, config_hash=config_hash(config),
                     rows=rows, tagged_ids=list(tagged), summary=summary)


def _mean_or_none(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)


def aggregate_records(records: list[RunRecord]) -> tuple[list[StepMetrics], dict]:
    """Column-wise arithmetic mean across repetitions.

    Undefined approval fractions are averaged over the repetitions where
    they are defined, and stay undefined only when no repetition defines
    them.
    """
    if not records:
        return [], {}
    n_steps = len(records[0].rows)
    n_tagged = max(len(r.tagged_ids) for r in records)
    mean_rows = []
    for t in range(n_steps):
        rows = [r.rows[t] for r in records]
        tagged = [
            sum(row.tagged_readers[k] if k < len(row.tagged_readers) else 0
                for row in rows) / len(rows)
            for k in range(n_tagged)
        ]
        mean_rows.append(StepMetrics(
            step=t + 1,
            approvals=sum(r.approvals for r in rows) / len(rows),
            assessments=sum(r.assessments for r in rows) / len(rows),
            approval_fraction=_mean_or_none([r.approval_fraction for r in rows]),
            approval_fraction_w10=_mean_or_none(
                [r.approval_fraction_w10 for r in rows]),
            excess_differences=sum(r.excess_differences for r in rows) / len(rows),
            mean_queue_len=sum(r.mean_queue_len for r in rows) / len(rows),
            tagged_readers=tagged,
        ))
    keys = ["final_excess_differences", "equilibrium_approval_fraction",
            "total_approvals", "total_assessments", "tagged_total_readers",
            "followers_mean", "total_news", "total_votes"]
    mean_summary = {k: _mean_or_none([r.summary.get(k) for r in records])
                    for k in keys}
    mean_summary["repetitions"] = len(records)
    return mean_rows, mean_summary


def _run_task(args: tuple[ScenarioConfig, int, int]) -> RunRecord:
    config, cell, rep = args
    return run_single(config, cell, rep)


def _run_many(tasks: list[tuple[ScenarioConfig, int, int]],
              jobs: int) -> list[RunRecord]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with multiprocessing.Pool(processes=min(jobs, len(tasks))) as pool:
        return pool.map(_run_task, tasks)


def run_scenario(config: ScenarioConfig, jobs: int = 1,
                 cell: int = 0) -> ScenarioResult:
    """All repetitions of one scenario plus their column-wise mean."""
    validate_config(config)
    tasks = [(config, cell, rep) for rep in range(config.repetitions)]
    records = _run_many(tasks, jobs)
    mean_rows, mean_summary = aggregate_records(records)
    return ScenarioResult(config, records, mean_rows, mean_summary)


def run_injection(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    """Injection experiment; requires an injection spec in the config."""
    if config.injection is None:
        raise ConfigError(["injection: required for an injection run"])
    return run_scenario(config, jobs=jobs)


@dataclass
class SweepCell:
    index: int
    label: str
    values: dict
    result: ScenarioResult


@dataclass
class SweepResult:
    base: ScenarioConfig
    axes: list[tuple[str, list]]
    cells: list[SweepCell]


def cell_label(values: dict) -> str:
    return "__".join(f"{k}={v}" for k, v in values.items())


def expand_axes(base: ScenarioConfig, axes: list[tuple[str, list]],
                max_cells: int = 512) -> list[tuple[int, dict, ScenarioConfig]]:
    """Cartesian product of axis values over the base config."""
    if not axes:
        raise ConfigError(["axes: at least one sweep axis required"])
    names = [canonical_field(name) for name, _ in axes]
    combos = list(itertools.product(*[values for _, values in axes]))
    if len(combos) > max_cells:
        raise ConfigError(
            [f"axes: grid of {len(combos)} cells exceeds the cap of {max_cells}"])
    cells = []
    for index, combo in enumerate(combos):
        given = {axes[k][0]: combo[k] for k in range(len(axes))}
        config = replace(base, **{names[k]: combo[k] for k in range(len(axes))})
        validate_config(config)
        cells.append((index, given, config))
    return cells


def run_sweep(base: ScenarioConfig, axes: list[tuple[str, list]],
              jobs: int = 1, max_cells: int = 512) -> SweepResult:
    """Independent scenario runs over the cartesian grid of axis values.

    Each cell derives its seeds from (master seed, cell index, rep), so
    results do not depend on execution order or parallelism.
    """
    cells = expand_axes(base, axes, max_cells)
    tasks = [(config, index, rep)
             for index, _, config in cells
             for rep in range(config.repetitions)]
    records = _run_many(tasks, jobs)
    out: list[SweepCell] = []
    cursor = 0
    for index, given, config in cells:
        cell_records = records[cursor:cursor + config.repetitions]
        cursor += config.repetitions
        mean_rows, mean_summary = aggregate_records(cell_records)
        out.append(SweepCell(index, cell_label(given), given,
                             ScenarioResult(config, cell_records,
                                            mean_rows, mean_summary)))
    return SweepResult(base, axes, out)
