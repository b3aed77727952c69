"""Monte-Carlo operating characteristics of a basket design.

Each simulated trial draws its stage cohorts from a dedicated random stream
keyed on (seed, trial, basket, stage), so results are bit-identical no matter
how trials are split across workers. Aggregation uses integer counters only.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import Decision, DesignSpec, run_single_stage, run_two_stage
from .errors import DomainError, ShapeError
from .numerics import RngStream, binomial_draw
from .posterior import BatchPosterior

STAGE1 = 0
STAGE2 = 1


@dataclass(frozen=True)
class Scenario:
    """One configuration of true response rates, with promising flags."""

    true_rates: tuple[float, ...]
    promising: tuple[bool, ...]
    label: str

    @classmethod
    def from_rates(cls, spec: DesignSpec, true_rates: Sequence[float], label: str) -> "Scenario":
        rates = tuple(float(r) for r in true_rates)
        if len(rates) != spec.num_baskets:
            raise ShapeError(
                f"scenario has {len(rates)} rates, design expects {spec.num_baskets}"
            )
        if any(not (0.0 <= r <= 1.0) for r in rates):
            raise DomainError(f"true rates must lie in [0, 1], got {rates}")
        promising = tuple(r > t0 for r, t0 in zip(rates, spec.theta0))
        return cls(true_rates=rates, promising=promising, label=label)


def scenario_suite(spec: DesignSpec) -> list[Scenario]:
    """The global null, the global alternative, and every mixed scenario in
    between; "k success" makes the last k baskets promising."""
    out = []
    for k in range(spec.num_baskets + 1):
        rates = list(spec.theta0[: spec.num_baskets - k]) + list(spec.theta1[spec.num_baskets - k:])
        out.append(Scenario.from_rates(spec, rates, f"{k} success"))
    return out


@dataclass(frozen=True)
class OperatingCharacteristics:
    """Frequentist summary of a design under one scenario.

    fwer is None when the scenario has no null basket; trialwise_power is
    None when it has no promising basket. For Monte-Carlo results every rate
    is an integer count divided by n_sims; exact (non-simulated) results
    carry n_sims = None.
    """

    per_basket_reject_rate: tuple[float, ...]
    fwer: float | None
    trialwise_power: float | None
    expected_n: tuple[float, ...]
    n_sims: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class TrialOutcomes:
    """Raw per-trial simulation results (row = trial)."""

    x_interim: np.ndarray | None
    x_total: np.ndarray
    continued: np.ndarray
    rejected: np.ndarray


def generate_counts(
    spec: DesignSpec, scenario: Scenario, trials: range, seed: int
) -> tuple[np.ndarray | None, np.ndarray]:
    """Stage-wise binomial draws for a block of trial indices."""
    root = RngStream(seed)
    num = len(trials)
    if spec.stages == 1:
        x = np.zeros((num, spec.num_baskets), dtype=int)
        for i, t in enumerate(trials):
            for b in range(spec.num_baskets):
                x[i, b] = binomial_draw(
                    root.child(t, b, STAGE1), spec.max_sizes[b], scenario.true_rates[b]
                )
        return None, x
    n1 = spec.stage1_sizes()
    x1 = np.zeros((num, spec.num_baskets), dtype=int)
    x2 = np.zeros((num, spec.num_baskets), dtype=int)
    for i, t in enumerate(trials):
        for b in range(spec.num_baskets):
            x1[i, b] = binomial_draw(root.child(t, b, STAGE1), n1[b], scenario.true_rates[b])
            x2[i, b] = binomial_draw(
                root.child(t, b, STAGE2), spec.max_sizes[b] - n1[b], scenario.true_rates[b]
            )
    return x1, x1 + x2


def decide_batch(
    spec: DesignSpec, x_interim: np.ndarray | None, x_total: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized decisions for many trials: (continued, rejected) booleans.

    Matches run_single_stage / run_two_stage trial by trial (asserted in the
    test suite); survivor groups share one batched stage-2 analysis because
    the partition space depends only on which baskets survived.
    """
    num = len(x_total)
    if spec.stages == 1:
        engine = BatchPosterior(spec.max_sizes, spec.partition_set(), spec.prior)
        probs = engine.exceed_probs(x_total, np.asarray(spec.theta0))
        rejected = probs > spec.boundary().q2
        return np.ones_like(rejected, dtype=bool), rejected

    boundary = spec.boundary()
    engine1 = BatchPosterior(spec.stage1_sizes(), spec.partition_set(), spec.prior)
    probs1 = engine1.exceed_probs(x_interim, np.asarray(spec.theta0))
    continued = probs1 > boundary.q1

    rejected = np.zeros((num, spec.num_baskets), dtype=bool)
    groups: dict[tuple[int, ...], list[int]] = {}
    for t in range(num):
        key = tuple(np.nonzero(continued[t])[0])
        if key:
            groups.setdefault(key, []).append(t)
    engines: dict[tuple[int, ...], BatchPosterior] = {}
    for survivors, rows in groups.items():
        if survivors not in engines:
            engines[survivors] = BatchPosterior(
                [spec.max_sizes[b] for b in survivors],
                spec.partition_set(len(survivors)),
                spec.prior,
            )
        theta0 = np.asarray([spec.theta0[b] for b in survivors])
        probs2 = engines[survivors].exceed_probs(x_total[np.ix_(rows, list(survivors))], theta0)
        hit = probs2 > boundary.q2
        for i, t in enumerate(rows):
            rejected[t, list(survivors)] = hit[i]
    return continued, rejected


def run_trials(spec: DesignSpec, scenario: Scenario, n_sims: int, seed: int) -> TrialOutcomes:
    """Simulate trials and keep the per-trial outcomes."""
    x1, xt = generate_counts(spec, scenario, range(n_sims), seed)
    continued, rejected = decide_batch(spec, x1, xt)
    return TrialOutcomes(x_interim=x1, x_total=xt, continued=continued, rejected=rejected)


def _chunk_counts(args) -> tuple[np.ndarray, int, np.ndarray]:
    spec, scenario, seed, start, stop = args
    x1, xt = generate_counts(spec, scenario, range(start, stop), seed)
    continued, rejected = decide_batch(spec, x1, xt)
    null_mask = ~np.asarray(scenario.promising)
    any_null_reject = int(rejected[:, null_mask].any(axis=1).sum()) if null_mask.any() else 0
    return rejected.sum(axis=0), any_null_reject, continued.sum(axis=0)


def _chunk_ranges(n_sims: int, workers: int) -> list[tuple[int, int]]:
    chunk = -(-n_sims // max(1, workers))
    return [(lo, min(lo + chunk, n_sims)) for lo in range(0, n_sims, chunk)]


def simulate(
    spec: DesignSpec,
    scenario: Scenario,
    n_sims: int = 5000,
    seed: int = 0,
    workers: int = 1,
) -> OperatingCharacteristics:
    """Estimate operating characteristics from n_sims simulated trials.

    The worker count only splits the trial range; per-trial streams plus
    integer-count aggregation make the result identical for any split.
    """
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    if len(scenario.true_rates) != spec.num_baskets:
        raise ShapeError("scenario does not match the design's basket count")
    jobs = [(spec, scenario, seed, lo, hi) for lo, hi in _chunk_ranges(n_sims, workers)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk_counts(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_counts, jobs))

    reject_counts = np.sum([p[0] for p in parts], axis=0)
    any_null = sum(p[1] for p in parts)
    continue_counts = np.sum([p[2] for p in parts], axis=0)

    rates = tuple(float(c) / n_sims for c in reject_counts)
    null_mask = [not p for p in scenario.promising]
    fwer = float(any_null) / n_sims if any(null_mask) else None
    if any(scenario.promising):
        weight = sum(spec.max_sizes[b] for b in range(spec.num_baskets) if scenario.promising[b])
        trialwise = (
            sum(spec.max_sizes[b] * rates[b] for b in range(spec.num_baskets) if scenario.promising[b])
            / weight
        )
    else:
        trialwise = None
    n1 = spec.stage1_sizes()
    expected_n = tuple(
        n1[b] + (spec.max_sizes[b] - n1[b]) * float(continue_counts[b]) / n_sims
        for b in range(spec.num_baskets)
    )
    return OperatingCharacteristics(
        per_basket_reject_rate=rates,
        fwer=fwer,
        trialwise_power=None if trialwise is None else float(trialwise),
        expected_n=expected_n,
        n_sims=n_sims,
        seed=seed,
    )


def decisions_from_outcomes(spec: DesignSpec, outcome_row: tuple) -> tuple[Decision, ...]:
    """Re-derive categorical decisions for one simulated trial (test helper)."""
    x1, xt = outcome_row
    if spec.stages == 1:
        from .posterior import BasketData

        return run_single_stage(BasketData.create(xt, spec.max_sizes), spec)
    return run_two_stage(x1, xt, spec).decisions
