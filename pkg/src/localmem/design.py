"""Go/no-go decision engine for single-stage and two-stage basket designs.

Stage I analyzes all baskets together at their interim sizes and stops
accrual for futility in any basket whose exceedance probability falls at or
below q1. Stage II re-analyzes only the surviving baskets at their maximum
sizes, re-enumerating partitions over the survivors so dropped baskets
contribute no data, and declares efficacy where the exceedance probability
exceeds q2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import CapacityError, DomainError, ShapeError
from .partitions import MAX_BASKETS, PartitionSet
from .posterior import (
    DEFAULT_PRIOR,
    BasketData,
    BetaParams,
    local_posterior,
    partition_posterior,
    prob_exceeds,
)

STAGE_INTERIM = 1
STAGE_FINAL = 2
STAGE_DONE = 3


class Decision(str, enum.Enum):
    PENDING = "pending"
    FUTILITY_STOPPED = "futility-stopped"
    EFFICACIOUS = "efficacious"
    NOT_PROMISING = "not-promising"
    CONTINUE = "continue"


@dataclass(frozen=True)
class Boundary:
    """Posterior-probability cutoffs: q1 at the interim look, q2 at the end."""

    q1: float
    q2: float


def stopping_boundary(lam: float, gamma: float, t: float) -> Boundary:
    """Power-function boundary (q1, q2) = (lam * t**gamma, lam)."""
    if not (0.0 < lam < 1.0):
        raise DomainError(f"lam must lie in (0, 1), got {lam}")
    if gamma < 0.0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    if not (0.0 < t <= 1.0):
        raise DomainError(f"information fraction t must lie in (0, 1], got {t}")
    return Boundary(q1=lam * t**gamma, q2=lam)


@dataclass(frozen=True)
class DesignSpec:
    """Everything needed to run or simulate one design."""

    num_baskets: int
    max_sizes: tuple[int, ...]
    theta0: tuple[float, ...]
    theta1: tuple[float, ...]
    lam: float
    gamma: float
    delta: float = 0.0
    prior: BetaParams = DEFAULT_PRIOR
    stages: int = 2
    interim_fraction: float | None = None
    interim_sizes: tuple[int, ...] | None = None

    @classmethod
    def create(
        cls,
        num_baskets: int,
        max_sizes,
        theta0,
        theta1,
        lam: float,
        gamma: float = 0.0,
        delta: float = 0.0,
        prior: BetaParams = DEFAULT_PRIOR,
        stages: int = 2,
        interim_fraction: float | None = None,
        interim_sizes=None,
    ) -> "DesignSpec":
        def expand(v, name, cast):
            if isinstance(v, (int, float)):
                return tuple(cast(v) for _ in range(num_baskets))
            vals = tuple(cast(u) for u in v)
            if len(vals) != num_baskets:
                raise ShapeError(f"{name} must have one entry per basket, got {len(vals)}")
            return vals

        if num_baskets < 1:
            raise DomainError(f"need at least one basket, got {num_baskets}")
        spec = cls(
            num_baskets=num_baskets,
            max_sizes=expand(max_sizes, "max_sizes", int),
            theta0=expand(theta0, "theta0", float),
            theta1=expand(theta1, "theta1", float),
            lam=float(lam),
            gamma=float(gamma),
            delta=float(delta),
            prior=prior,
            stages=int(stages),
            interim_fraction=None if interim_fraction is None else float(interim_fraction),
            interim_sizes=None if interim_sizes is None else expand(interim_sizes, "interim_sizes", int),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.stages not in (1, 2):
            raise DomainError(f"stages must be 1 or 2, got {self.stages}")
        if not (0.0 < self.lam < 1.0):
            raise DomainError(f"lam must lie in (0, 1), got {self.lam}")
        if self.gamma < 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.num_baskets > MAX_BASKETS:
            raise CapacityError(
                f"{self.num_baskets} baskets exceeds the partition-enumeration cap of {MAX_BASKETS}"
            )
        for b in range(self.num_baskets):
            if self.max_sizes[b] < 1:
                raise DomainError(f"basket {b}: max size must be >= 1")
            if not (0.0 < self.theta0[b] < 1.0) or not (0.0 < self.theta1[b] < 1.0):
                raise DomainError(f"basket {b}: rates must lie in (0, 1)")
            if self.theta1[b] <= self.theta0[b]:
                raise DomainError(
                    f"basket {b}: target rate {self.theta1[b]} must exceed null rate {self.theta0[b]}"
                )
        if self.stages == 2:
            if self.interim_sizes is None and self.interim_fraction is None:
                raise DomainError("two-stage designs need interim_fraction or interim_sizes")
            if self.interim_fraction is not None and not (0.0 < self.interim_fraction < 1.0):
                raise DomainError(f"interim_fraction must lie in (0, 1), got {self.interim_fraction}")
            for b, n1 in enumerate(self.stage1_sizes()):
                if not (0 < n1 < self.max_sizes[b]):
                    raise DomainError(
                        f"basket {b}: interim size {n1} must satisfy 0 < n1 < {self.max_sizes[b]}"
                    )

    def stage1_sizes(self) -> tuple[int, ...]:
        """Interim sample sizes; derived as round(t * N) when only a fraction is given."""
        if self.stages == 1:
            return self.max_sizes
        if self.interim_sizes is not None:
            return self.interim_sizes
        return tuple(int(round(self.interim_fraction * n)) for n in self.max_sizes)

    def information_fraction(self) -> float:
        """Fraction of total information available at the interim look."""
        if self.stages == 1:
            return 1.0
        return sum(self.stage1_sizes()) / sum(self.max_sizes)

    def boundary(self) -> Boundary:
        if self.stages == 1:
            return Boundary(q1=self.lam, q2=self.lam)
        return stopping_boundary(self.lam, self.gamma, self.information_fraction())

    def partition_set(self, num_baskets: int | None = None) -> PartitionSet:
        return PartitionSet.build(num_baskets or self.num_baskets, self.delta)


@dataclass(frozen=True)
class TrialState:
    """Snapshot of one trial between analyses.

    Stopped baskets never re-enter; their decisions are frozen at the stage
    where the rule fired.
    """

    stage: int
    active: tuple[bool, ...]
    data: BasketData
    decisions: tuple[Decision, ...]

    @classmethod
    def at_interim(cls, x: Sequence[int], spec: DesignSpec) -> "TrialState":
        data = BasketData.create(x, spec.stage1_sizes())
        return cls(
            stage=STAGE_INTERIM,
            active=tuple(True for _ in range(spec.num_baskets)),
            data=data,
            decisions=tuple(Decision.PENDING for _ in range(spec.num_baskets)),
        )

    def with_final_data(self, x_total: Sequence[int], spec: DesignSpec) -> "TrialState":
        """Attach cumulative counts at the maximum sizes for active baskets.

        Stopped baskets keep their interim counts; their entries in x_total
        are ignored.
        """
        xs = tuple(int(v) for v in x_total)
        if len(xs) != spec.num_baskets:
            raise ShapeError(f"x_total must have {spec.num_baskets} entries, got {len(xs)}")
        x = tuple(
            xs[b] if self.active[b] else self.data.x[b] for b in range(spec.num_baskets)
        )
        n = tuple(
            spec.max_sizes[b] if self.active[b] else self.data.n[b]
            for b in range(spec.num_baskets)
        )
        return replace(self, data=BasketData.create(x, n, self.data.basket_ids))

    @property
    def is_complete(self) -> bool:
        return self.stage == STAGE_DONE


def _exceedance(data: BasketData, spec: DesignSpec, theta0: Sequence[float]) -> list[float]:
    pset = spec.partition_set(data.num_baskets)
    pp = partition_posterior(data, pset, spec.prior)
    return [
        prob_exceeds(local_posterior(b, data, pp, pset, spec.prior), theta0[b])
        for b in range(data.num_baskets)
    ]


def interim_step(state: TrialState, spec: DesignSpec) -> TrialState:
    """Apply the stage-I futility rule to interim data on all baskets."""
    if spec.stages != 2:
        raise DomainError("interim_step applies to two-stage designs only")
    if state.stage != STAGE_INTERIM:
        raise DomainError(f"interim_step needs a stage-1 state, got stage {state.stage}")
    n1 = spec.stage1_sizes()
    if state.data.n != n1:
        raise ShapeError(f"interim data sizes {state.data.n} do not match plan {n1}")
    q1 = spec.boundary().q1
    probs = _exceedance(state.data, spec, spec.theta0)
    active = tuple(p > q1 for p in probs)
    decisions = tuple(
        Decision.PENDING if keep else Decision.FUTILITY_STOPPED for keep in active
    )
    stage = STAGE_FINAL if any(active) else STAGE_DONE
    return TrialState(stage=stage, active=active, data=state.data, decisions=decisions)


def final_step(state: TrialState, spec: DesignSpec) -> TrialState:
    """Apply the stage-II efficacy rule over the surviving baskets only.

    Partitions are re-enumerated over the survivors, so data from baskets
    stopped at the interim are fully excluded from borrowing.
    """
    if state.stage != STAGE_FINAL:
        raise DomainError(f"final_step needs a stage-2 state, got stage {state.stage}")
    survivors = [b for b, keep in enumerate(state.active) if keep]
    if not survivors:
        return replace(state, stage=STAGE_DONE)
    for b in survivors:
        if state.data.n[b] != spec.max_sizes[b]:
            raise ShapeError(
                f"basket {b} is active but has {state.data.n[b]} patients, expected {spec.max_sizes[b]}"
            )
    sub = BasketData.create(
        [state.data.x[b] for b in survivors],
        [state.data.n[b] for b in survivors],
        [state.data.basket_ids[b] for b in survivors],
    )
    q2 = spec.boundary().q2
    probs = _exceedance(sub, spec, [spec.theta0[b] for b in survivors])
    decisions = list(state.decisions)
    for i, b in enumerate(survivors):
        decisions[b] = Decision.EFFICACIOUS if probs[i] > q2 else Decision.NOT_PROMISING
    return TrialState(
        stage=STAGE_DONE,
        active=tuple(False for _ in state.active),
        data=state.data,
        decisions=tuple(decisions),
    )


def run_single_stage(data: BasketData, spec: DesignSpec) -> tuple[Decision, ...]:
    """One analysis over all baskets at their maximum sizes."""
    if spec.stages != 1:
        raise DomainError("run_single_stage applies to single-stage designs only")
    if data.num_baskets != spec.num_baskets:
        raise ShapeError(
            f"data covers {data.num_baskets} baskets, design expects {spec.num_baskets}"
        )
    if data.n != spec.max_sizes:
        raise ShapeError(f"data sizes {data.n} do not match the design sizes {spec.max_sizes}")
    q2 = spec.boundary().q2
    probs = _exceedance(data, spec, spec.theta0)
    return tuple(
        Decision.EFFICACIOUS if p > q2 else Decision.NOT_PROMISING for p in probs
    )


def run_two_stage(
    x_interim: Sequence[int], x_total: Sequence[int], spec: DesignSpec
) -> TrialState:
    """Convenience driver: interim rule, then final rule on the survivors."""
    state = interim_step(TrialState.at_interim(x_interim, spec), spec)
    if state.stage == STAGE_DONE:
        return state
    return final_step(state.with_final_data(x_total, spec), spec)
