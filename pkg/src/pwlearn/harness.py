"""Experiment orchestration: seeded target sampling, sweeps, and audits.

All randomness flows through numpy's default generator (PCG64) seeded from an
explicit 64-bit seed; per-run generators are derived with SeedSequence.spawn.
Identical config and seed therefore reproduce every output byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from . import pwl
from .adversary import AdversaryConfig, MatchResult, run_match
from .bounds import kl_d_bound
from .errors import AuditFailure, DomainError
from .learner import LinintLearner, kl_invariants, make_learner, run_trials

__all__ = [
    "MAX_STAGES",
    "ExperimentConfig",
    "SweepRow",
    "SWEEP_CSV_HEADER",
    "AuditReport",
    "parse_epsilon_grid",
    "sample_target",
    "run_sweep",
    "run_invariant_audit",
]

# 2^24 trials is around 16M committed knots; past that, memory and runtime
# stop being desk-scale.
MAX_STAGES = 24

DEFAULT_AUDIT_EPSILONS = (0.4, 0.25, 0.1, 0.05, 0.02)

MODES = ("match", "sweep", "invariants", "bounds")


@dataclass
class ExperimentConfig:
    mode: str = "match"
    learner: str = "linint"
    epsilon: Optional[float] = None
    epsilons: Optional[list[float]] = None
    stages: int = 14
    seed: int = 0
    runs: int = 1000
    max_trials: int = 10_000
    q: float = 2.0
    knot_count: int = 12
    target: str = "adversary"
    target_file: Optional[str] = None
    out: Optional[str] = None
    trace_out: Optional[str] = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not 1 <= self.stages <= MAX_STAGES:
            raise DomainError(
                f"stages must lie in 1..{MAX_STAGES} (2^{MAX_STAGES} trials is the "
                f"desk-scale ceiling), got {self.stages!r}"
            )
        if self.runs < 0:
            raise DomainError(f"runs must be nonnegative, got {self.runs!r}")
        if self.max_trials < 2:
            raise DomainError(f"max_trials must be at least 2, got {self.max_trials!r}")
        if self.q != math.inf and self.q < 1.0:
            raise DomainError(f"norm order must be >= 1 or inf, got {self.q!r}")
        if self.knot_count < 2:
            raise DomainError(f"knot_count must be at least 2, got {self.knot_count!r}")

    def epsilon_list(self) -> list[float]:
        if self.epsilons is not None:
            return list(self.epsilons)
        if self.epsilon is not None:
            return [self.epsilon]
        return []


def parse_epsilon_grid(text: str) -> list[float]:
    """Parse "log:a:b:n" (n log-spaced points from a to b) or a comma list."""
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise DomainError(f"bad grid spec {text!r}; expected log:a:b:n")
        try:
            a, b, n = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise DomainError(f"bad grid spec {text!r}: {exc}") from exc
        if a <= 0.0 or b <= 0.0:
            raise DomainError("log grid endpoints must be positive")
        if n < 0:
            raise DomainError("log grid size must be nonnegative")
        if n == 0:
            return []
        if n == 1:
            return [a]
        return [float(e) for e in np.geomspace(a, b, n)]
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise DomainError(f"bad epsilon list {text!r}: {exc}") from exc


def _distinct_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    # Collisions among uniform doubles are vanishingly rare; redraw if one
    # happens anyway so downstream distance sums never divide by zero.
    while True:
        xs = rng.random(size)
        if np.unique(xs).size == size:
            return xs


def _sample_target_rng(
    q: float, knot_count: int, rng: np.random.Generator
) -> pwl.PiecewiseLinearFunction:
    interior = knot_count - 2
    while True:
        us = np.concatenate(([0.0, 1.0], _distinct_uniform(rng, interior)))
        if np.unique(us).size == knot_count:
            break
    us.sort()
    vs = rng.normal(0.0, 1.0, size=knot_count)
    f = pwl.from_points(zip(us, vs))
    # One rescale makes the norm 1 up to rounding; repeat in case an ulp
    # spills over the membership line.
    for _ in range(4):
        norm = pwl.derivative_norm(f, q)
        if norm <= 1.0:
            break
        f = pwl.PiecewiseLinearFunction(f.us, tuple(v / norm for v in f.vs))
    return f


def sample_target(q: float, knot_count: int, seed) -> pwl.PiecewiseLinearFunction:
    """Draw a random function whose derivative q-norm is at most 1.

    Coordinates are knot_count sorted uniforms including 0 and 1; values are
    standard normal, rescaled by 1/norm whenever the norm exceeds 1. The seed
    fully determines the result (numpy PCG64).
    """
    if q != math.inf and q < 1.0:
        raise DomainError(f"norm order must be >= 1 or inf, got {q!r}")
    if knot_count < 2:
        raise DomainError(f"knot_count must be at least 2, got {knot_count!r}")
    return _sample_target_rng(q, knot_count, np.random.default_rng(seed))


SWEEP_CSV_HEADER = (
    "epsilon",
    "stages",
    "total_loss",
    "lower_partial",
    "upper_linint",
    "loss_times_sqrt_eps",
)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    stages: int
    total_loss: float
    lower_partial: float
    upper_linint: float
    loss_times_sqrt_eps: float

    def csv_fields(self) -> list[str]:
        return [
            format(self.epsilon, ".17g"),
            str(self.stages),
            format(self.total_loss, ".17g"),
            format(self.lower_partial, ".17g"),
            format(self.upper_linint, ".17g"),
            format(self.loss_times_sqrt_eps, ".17g"),
        ]


def write_sweep_csv(rows, out: str | os.PathLike | IO[str]) -> None:
    own = isinstance(out, (str, os.PathLike))
    fh = open(out, "w", newline="", encoding="utf-8") if own else out
    try:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow(row.csv_fields())
            fh.flush()
    finally:
        if own:
            fh.close()


def run_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """One adversary match per epsilon, with bound values attached.

    Rows come out sorted by epsilon. When config.out is set, each row is
    written and flushed as soon as it exists, so an interrupted sweep leaves
    the completed rows on disk.
    """
    config.validate()
    epsilons = sorted(config.epsilon_list())
    rows: list[SweepRow] = []
    fh = open(config.out, "w", newline="", encoding="utf-8") if config.out else None
    try:
        writer = None
        if fh is not None:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_CSV_HEADER)
            fh.flush()
        for eps in epsilons:
            learner = make_learner(config.learner)
            result = run_match(
                learner,
                AdversaryConfig(eps, config.stages),
                collect_records=False,
            )
            row = SweepRow(
                epsilon=eps,
                stages=config.stages,
                total_loss=result.total_loss,
                lower_partial=result.lower_partial,
                upper_linint=result.upper_linint,
                loss_times_sqrt_eps=result.total_loss * math.sqrt(eps),
            )
            rows.append(row)
            if writer is not None:
                writer.writerow(row.csv_fields())
                fh.flush()
    finally:
        if fh is not None:
            fh.close()
    return rows


@dataclass
class AuditReport:
    """Worst observed values over the audited runs and matches.

    d_sums maps each tested exponent r to the worst observed sum of d^r;
    d_bounds carries the corresponding closed-form caps.
    """

    runs: int = 0
    trials_total: int = 0
    worst_e2_over_d: float = 0.0
    worst_p2_loss: float = 0.0
    d_sums: dict[float, float] = field(default_factory=dict)
    d_bounds: dict[float, float] = field(default_factory=dict)
    adversary_epsilons: list[float] = field(default_factory=list)
    adversary_stages: int = 0
    max_energy_residual: float = 0.0
    max_abs_slope: float = 0.0
    max_j_probe: float = 0.0
    violations: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "runs": self.runs,
            "trials_total": self.trials_total,
            "worst_e2_over_d": self.worst_e2_over_d,
            "worst_p2_loss": self.worst_p2_loss,
            "d_sums": {str(r): v for r, v in self.d_sums.items()},
            "d_bounds": {str(r): v for r, v in self.d_bounds.items()},
            "adversary_epsilons": list(self.adversary_epsilons),
            "adversary_stages": self.adversary_stages,
            "max_energy_residual": self.max_energy_residual,
            "max_abs_slope": self.max_abs_slope,
            "max_j_probe": self.max_j_probe,
            "violations": list(self.violations),
        }


D_EXPONENTS = (1.5, 2.0, 3.0)

# Audit tolerances: sums pick up at most a few thousand rounding errors, so
# 1e-9 of absolute slack is generous; the energy recursion and slope caps are
# tighter because their arithmetic is (almost) exact.
E2D_TOL = 1e-9
D_SUM_TOL = 1e-9
RESIDUAL_TOL = 1e-10
SLOPE_TOL = 1e-12


def run_invariant_audit(config: ExperimentConfig) -> AuditReport:
    """Replay the trace and energy invariants at scale.

    Runs config.runs seeded matches of the interpolation learner against
    sampled targets (derivative 2-norm at most 1) on random distinct inputs,
    plus one adversary match per epsilon for each baseline learner. Raises
    AuditFailure listing every violated invariant; the report rides along on
    the exception.
    """
    config.validate()
    report = AuditReport(
        runs=config.runs,
        d_sums={r: 0.0 for r in D_EXPONENTS},
        d_bounds={r: kl_d_bound(r) for r in D_EXPONENTS},
    )
    if config.runs == 0:
        return report
    violations: list[str] = []
    children = np.random.SeedSequence(config.seed).spawn(config.runs)
    for k in range(config.runs):
        rng = np.random.default_rng(children[k])
        knot_count = int(rng.integers(2, 33))
        target = _sample_target_rng(2.0, knot_count, rng)
        m = int(rng.integers(2, config.max_trials + 1))
        xs = _distinct_uniform(rng, m)
        seq = [(float(x), pwl.evaluate(target, float(x))) for x in xs]
        records, account = run_trials(LinintLearner(), seq, p=2.0)
        report.trials_total += account.trials
        if account.total > report.worst_p2_loss:
            report.worst_p2_loss = account.total
        if account.total > 1.0 + E2D_TOL:
            violations.append(
                f"run {k}: squared loss {account.total!r} exceeds 1 "
                f"(first x={seq[0][0]!r})"
            )
        for r in D_EXPONENTS:
            e2d, d_sum = kl_invariants(records, r)
            if d_sum > report.d_sums[r]:
                report.d_sums[r] = d_sum
            if d_sum > report.d_bounds[r] + D_SUM_TOL:
                violations.append(
                    f"run {k}: sum d^{r} = {d_sum!r} exceeds {report.d_bounds[r]!r}"
                )
        if e2d > report.worst_e2_over_d:
            report.worst_e2_over_d = e2d
        if e2d > 1.0 + E2D_TOL:
            violations.append(f"run {k}: sum e^2/d = {e2d!r} exceeds 1")

    report.adversary_epsilons = list(DEFAULT_AUDIT_EPSILONS)
    # Scratch-recomputing the probe energy every trial is O(n) per trial, so
    # the per-trial audit stays at a moderate stage budget.
    stages = min(config.stages, 12)
    report.adversary_stages = stages
    for eps in report.adversary_epsilons:
        for kind in ("zero", "nearest", "linint"):
            result = run_match(
                make_learner(kind),
                AdversaryConfig(eps, stages),
                collect_records=False,
                audit_per_trial=True,
            )
            a = result.audit
            label = f"match eps={eps} learner={kind}"
            if a.max_recursion_residual > report.max_energy_residual:
                report.max_energy_residual = a.max_recursion_residual
            if a.max_abs_slope > report.max_abs_slope:
                report.max_abs_slope = a.max_abs_slope
            if a.max_j_probe > report.max_j_probe:
                report.max_j_probe = a.max_j_probe
            if a.max_recursion_residual > RESIDUAL_TOL:
                violations.append(
                    f"{label}: energy recursion residual {a.max_recursion_residual!r}"
                )
            if a.max_abs_slope > 1.0 + SLOPE_TOL:
                violations.append(f"{label}: committed slope {a.max_abs_slope!r}")
            if not a.max_j_probe < 0.25:
                violations.append(f"{label}: probe energy {a.max_j_probe!r} >= 1/4")
            for s in result.per_stage:
                need = 1 if s.i == 1 else 2 ** (s.i - 2)
                if s.accepted < need:
                    violations.append(
                        f"{label}: stage {s.i} accepted {s.accepted} < {need}"
                    )
            if result.total_loss < result.lower_partial:
                violations.append(
                    f"{label}: loss {result.total_loss!r} below forced "
                    f"minimum {result.lower_partial!r}"
                )
    report.violations = violations
    if violations:
        raise AuditFailure(
            "invariant audit failed:\n" + "\n".join(violations),
            violations=violations,
            report=report,
        )
    return report


def config_from_json(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid config JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DomainError("config JSON must be an object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    config = ExperimentConfig(**doc)
    config.validate()
    return config
