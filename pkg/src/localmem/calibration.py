"""Boundary calibration: pick (lam, gamma) maximizing power under control.

The search evaluates every grid point on one shared set of simulated trials
(common random numbers), so grid comparisons are not washed out by
Monte-Carlo noise. Feasibility means the family-wise error rate under the
global null stays at or below the target; among feasible points the one with
the highest trial-wise power under the global alternative wins, with ties
broken by lower error rate, then lower lam, then lower gamma.

The heavy per-trial quantities are computed once: stage-1 exceedance
probabilities, plus stage-2 exceedance probabilities for every survivor set a
trial can produce as q1 sweeps through its range (survivor sets are nested in
q1, so there are at most B + 1 of them per trial).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import DesignSpec
from .errors import DomainError, InfeasibleCalibrationError
from .posterior import BatchPosterior
from .simulation import Scenario, _chunk_ranges, generate_counts

DEFAULT_LAMBDA_GRID = tuple(np.round(np.arange(0.900, 0.9995, 0.001), 3))
DEFAULT_GAMMA_GRID = tuple(np.round(np.arange(0.0, 3.0001, 0.05), 2))


@dataclass(frozen=True)
class CalibrationProblem:
    """Search space and budget. The template's lam and gamma are ignored."""

    spec_template: DesignSpec
    fwer_target: float = 0.10
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    n_sims: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not self.lambda_grid or any(not (0.0 < v < 1.0) for v in self.lambda_grid):
            raise DomainError("lambda grid must be non-empty with values in (0, 1)")
        if self.spec_template.stages == 2 and (
            not self.gamma_grid or any(v < 0.0 for v in self.gamma_grid)
        ):
            raise DomainError("gamma grid must be non-empty with values >= 0")
        if not (0.0 <= self.fwer_target < 1.0):
            raise DomainError(f"fwer_target must lie in [0, 1), got {self.fwer_target}")
        if self.n_sims < 1:
            raise DomainError(f"n_sims must be >= 1, got {self.n_sims}")

    def null_scenario(self) -> Scenario:
        return Scenario.from_rates(self.spec_template, self.spec_template.theta0, "global null")

    def alternative_scenario(self) -> Scenario:
        return Scenario.from_rates(
            self.spec_template, self.spec_template.theta1, "global alternative"
        )


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    gamma: float
    fwer: float
    power: float


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    gamma: float
    achieved_fwer: float
    achieved_power: float
    frontier: tuple[FrontierPoint, ...] = field(repr=False)


def _single_stage_chunk(args) -> np.ndarray:
    spec, scenario, seed, lo, hi = args
    _, x = generate_counts(spec, scenario, range(lo, hi), seed)
    engine = BatchPosterior(spec.max_sizes, spec.partition_set(), spec.prior)
    return engine.exceed_probs(x, np.asarray(spec.theta0))


def _two_stage_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    spec, scenario, seed, lo, hi = args
    num_baskets = spec.num_baskets
    x1, xt = generate_counts(spec, scenario, range(lo, hi), seed)
    engine1 = BatchPosterior(spec.stage1_sizes(), spec.partition_set(), spec.prior)
    p1 = engine1.exceed_probs(x1, np.asarray(spec.theta0))

    rows = len(p1)
    order = np.argsort(-p1, axis=1, kind="stable")
    sorted_vals = np.take_along_axis(p1, order, axis=1)
    p2 = np.full((rows, num_baskets + 1, num_baskets), -np.inf)
    groups: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for t in range(rows):
        for r in range(1, num_baskets + 1):
            if r < num_baskets and sorted_vals[t, r - 1] == sorted_vals[t, r]:
                continue  # a tie spans this cut, so no q1 produces exactly r survivors
            survivors = tuple(sorted(int(b) for b in order[t, :r]))
            groups.setdefault(survivors, []).append((t, r))
    engines: dict[int, dict[tuple[int, ...], BatchPosterior]] = {}
    for survivors, items in groups.items():
        engine = engines.setdefault(len(survivors), {}).get(survivors)
        if engine is None:
            engine = BatchPosterior(
                [spec.max_sizes[b] for b in survivors],
                spec.partition_set(len(survivors)),
                spec.prior,
            )
            engines[len(survivors)][survivors] = engine
        idx = [t for t, _ in items]
        theta0 = np.asarray([spec.theta0[b] for b in survivors])
        vals = engine.exceed_probs(xt[np.ix_(idx, list(survivors))], theta0)
        cols = list(survivors)
        for i, (t, r) in enumerate(items):
            p2[t, r, cols] = vals[i]
    return p1, p2


def _collect(fn, spec, scenario, n_sims, seed, workers):
    jobs = [(spec, scenario, seed, lo, hi) for lo, hi in _chunk_ranges(n_sims, workers)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _pick(
    candidates: list[tuple[int, int, float, float]],
    fwer_target: float,
    n_sims: int,
    trial_weight: int,
) -> tuple[CalibrationResult | None, float]:
    """candidates: (fwer_count, power_count, lam, gamma) per grid point."""
    feasible = []
    min_fwer = np.inf
    for fwer_count, power_count, lam, gamma in candidates:
        fwer = fwer_count / n_sims
        min_fwer = min(min_fwer, fwer)
        if fwer_count <= fwer_target * n_sims + 1e-9:
            feasible.append((fwer_count, power_count, lam, gamma))
    if not feasible:
        return None, float(min_fwer)
    best = min(feasible, key=lambda c: (-c[1], c[0], c[2], c[3]))
    frontier = tuple(
        FrontierPoint(lam=lam, gamma=gamma, fwer=fc / n_sims, power=pc / (n_sims * trial_weight))
        for fc, pc, lam, gamma in feasible
    )
    result = CalibrationResult(
        lam=float(best[2]),
        gamma=float(best[3]),
        achieved_fwer=best[0] / n_sims,
        achieved_power=best[1] / (n_sims * trial_weight),
        frontier=frontier,
    )
    return result, float(min_fwer)


def calibrate(problem: CalibrationProblem, workers: int = 1) -> CalibrationResult:
    """Grid search over (lam, gamma) for a two-stage design."""
    spec = problem.spec_template
    if spec.stages != 2:
        raise DomainError("calibrate expects a two-stage template; use calibrate_fixed for stages=1")
    n_sims = problem.n_sims
    weights = np.asarray(spec.max_sizes)
    trial_weight = int(weights.sum())
    t_frac = spec.information_fraction()

    null_parts = _collect(_two_stage_chunk, spec, problem.null_scenario(), n_sims, problem.seed, workers)
    alt_parts = _collect(
        _two_stage_chunk, spec, problem.alternative_scenario(), n_sims, problem.seed, workers
    )
    p1_null = np.concatenate([p[0] for p in null_parts])
    p2_null = np.concatenate([p[1] for p in null_parts])
    p1_alt = np.concatenate([p[0] for p in alt_parts])
    p2_alt = np.concatenate([p[1] for p in alt_parts])
    rows = np.arange(n_sims)

    candidates = []
    for gamma in problem.gamma_grid:
        shrink = t_frac**gamma
        for lam in problem.lambda_grid:
            q1 = lam * shrink
            r_null = (p1_null > q1).sum(axis=1)
            fwer_count = int((p2_null[rows, r_null, :].max(axis=1) > lam).sum())
            r_alt = (p1_alt > q1).sum(axis=1)
            reject_alt = p2_alt[rows, r_alt, :] > lam
            power_count = int((reject_alt * weights[None, :]).sum())
            candidates.append((fwer_count, power_count, float(lam), float(gamma)))
    result, min_fwer = _pick(candidates, problem.fwer_target, n_sims, trial_weight)
    if result is None:
        raise InfeasibleCalibrationError(
            f"no grid point controls FWER at {problem.fwer_target}; minimum achieved was {min_fwer:.4f}",
            min_achieved_fwer=min_fwer,
        )
    return result


def calibrate_fixed(problem: CalibrationProblem, workers: int = 1) -> CalibrationResult:
    """Threshold search (lam only) for a single-stage design; gamma reports 0."""
    spec = problem.spec_template
    if spec.stages != 1:
        raise DomainError("calibrate_fixed expects a single-stage template")
    n_sims = problem.n_sims
    weights = np.asarray(spec.max_sizes)
    trial_weight = int(weights.sum())

    p_null = np.concatenate(
        _collect(_single_stage_chunk, spec, problem.null_scenario(), n_sims, problem.seed, workers)
    )
    p_alt = np.concatenate(
        _collect(
            _single_stage_chunk, spec, problem.alternative_scenario(), n_sims, problem.seed, workers
        )
    )
    candidates = []
    for lam in problem.lambda_grid:
        fwer_count = int((p_null > lam).any(axis=1).sum())
        power_count = int(((p_alt > lam) * weights[None, :]).sum())
        candidates.append((fwer_count, power_count, float(lam), 0.0))
    result, min_fwer = _pick(candidates, problem.fwer_target, n_sims, trial_weight)
    if result is None:
        raise InfeasibleCalibrationError(
            f"no grid point controls FWER at {problem.fwer_target}; minimum achieved was {min_fwer:.4f}",
            min_achieved_fwer=min_fwer,
        )
    return result


def calibrated_spec(problem: CalibrationProblem, result: CalibrationResult) -> DesignSpec:
    """The template with the selected boundary parameters filled in."""
    from dataclasses import replace

    return replace(problem.spec_template, lam=result.lam, gamma=result.gamma)
