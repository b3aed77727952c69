"""Exact Simon two-stage designs as a frequentist baseline.

A design (r1, n1, r, n) stops for futility after n1 patients when at most r1
responses are seen, and declares the treatment promising when the final
response total exceeds r. All error rates here are exact binomial sums, not
simulations. When several baskets each run the design independently, the
per-basket significance level is the family-wise target divided by the number
of baskets (Bonferroni).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Decision
from .errors import CapacityError, DomainError
from .numerics import binom_pmf, binom_sf
from .simulation import OperatingCharacteristics, Scenario

DEFAULT_N_MAX = 55


@dataclass(frozen=True)
class SimonDesign:
    r1: int
    n1: int
    r: int
    n: int
    alpha_actual: float
    power_actual: float
    en_null: float
    pet_null: float

    def __post_init__(self):
        if not (0 <= self.r1 <= self.n1 < self.n and self.r1 <= self.r <= self.n):
            raise DomainError(f"inconsistent Simon design bounds: {self}")


@dataclass(frozen=True)
class SimonSearchResult:
    minimax: SimonDesign
    optimal: SimonDesign


def _pmf_vector(n: int, p: float) -> np.ndarray:
    return np.array([binom_pmf(k, n, p) for k in range(n + 1)])


def _upper_tail(n: int, p: float) -> np.ndarray:
    """tail[j + 1] = P(X > j) for j in -1..n."""
    pmf = _pmf_vector(n, p)
    geq = pmf[::-1].cumsum()[::-1]  # geq[i] = P(X >= i)
    return np.concatenate((geq, [0.0]))


def reject_probability(design: SimonDesign, p: float) -> float:
    """Exact probability of declaring the treatment promising at true rate p."""
    n2 = design.n - design.n1
    total = 0.0
    for x1 in range(design.r1 + 1, design.n1 + 1):
        need = design.r - x1  # stage-2 total must exceed this
        if need < 0:
            tail = 1.0
        elif need >= n2:
            tail = 0.0
        else:
            tail = binom_sf(need, n2, p)
        total += binom_pmf(x1, design.n1, p) * tail
    return total


def early_stop_probability(design: SimonDesign, p: float) -> float:
    return float(sum(binom_pmf(k, design.n1, p) for k in range(design.r1 + 1)))


def expected_size(design: SimonDesign, p: float) -> float:
    pet = early_stop_probability(design, p)
    return design.n1 + (1.0 - pet) * (design.n - design.n1)


def simon_search(
    p0: float, p1: float, alpha: float, beta: float, n_max: int = DEFAULT_N_MAX
) -> SimonSearchResult:
    """Exhaustive search for the minimax and optimal two-stage designs.

    Feasibility requires exact type I error <= alpha at p0 and exact power
    >= 1 - beta at p1. Minimax has the smallest total n (ties by smaller
    expected null size); optimal has the smallest expected size under p0.
    """
    if not (0.0 < p0 < p1 < 1.0):
        raise DomainError(f"need 0 < p0 < p1 < 1, got p0={p0}, p1={p1}")
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise DomainError(f"alpha and beta must lie in (0, 1), got {alpha}, {beta}")

    minimax: SimonDesign | None = None
    optimal: SimonDesign | None = None
    for n in range(2, n_max + 1):
        for n1 in range(1, n):
            n2 = n - n1
            pmf1_p0 = _pmf_vector(n1, p0)
            pmf1_p1 = _pmf_vector(n1, p1)
            tail2_p0 = _upper_tail(n2, p0)
            tail2_p1 = _upper_tail(n2, p1)
            cum1_p0 = pmf1_p0.cumsum()
            # reject prob for bounds (r1, r): sum_{x1 > r1} pmf1[x1] * P(X2 > r - x1).
            # Build it for all (x1, r) at once, then suffix-sum over x1.
            x1 = np.arange(n1 + 1)[:, None]
            r_all = np.arange(n)[None, :]
            j = np.clip(r_all - x1 + 1, 0, n2 + 1)
            rej_p0 = (pmf1_p0[:, None] * tail2_p0[j])[::-1].cumsum(axis=0)[::-1]
            rej_p1 = (pmf1_p1[:, None] * tail2_p1[j])[::-1].cumsum(axis=0)[::-1]
            for r1 in range(0, n1):
                alpha_by_r = rej_p0[r1 + 1, r1:]  # decreasing in r
                feasible = alpha_by_r <= alpha
                if not feasible.any():
                    continue
                r = r1 + int(np.argmax(feasible))  # smallest r meeting alpha
                power = float(rej_p1[r1 + 1, r])
                if power < 1.0 - beta:
                    continue  # larger r only lowers power further
                pet = float(cum1_p0[r1])
                cand = SimonDesign(
                    r1=r1,
                    n1=n1,
                    r=r,
                    n=n,
                    alpha_actual=float(rej_p0[r1 + 1, r]),
                    power_actual=power,
                    en_null=n1 + (1.0 - pet) * n2,
                    pet_null=pet,
                )
                if minimax is None or (cand.n, cand.en_null) < (minimax.n, minimax.en_null):
                    minimax = cand
                if optimal is None or (cand.en_null, cand.n, cand.n1) < (
                    optimal.en_null,
                    optimal.n,
                    optimal.n1,
                ):
                    optimal = cand
    if minimax is None or optimal is None:
        raise CapacityError(
            f"no two-stage design with n <= {n_max} meets alpha={alpha}, power={1 - beta}"
        )
    return SimonSearchResult(minimax=minimax, optimal=optimal)


def simon_decide(design: SimonDesign, x1: int, x_total: int | None = None) -> Decision:
    """Apply the design's rules to observed counts.

    With only stage-1 data the outcome is futility stop or continue; with the
    final total it is efficacious or not promising.
    """
    if not (0 <= x1 <= design.n1):
        raise DomainError(f"x1 must lie in [0, {design.n1}], got {x1}")
    stopped = x1 <= design.r1
    if x_total is None:
        return Decision.FUTILITY_STOPPED if stopped else Decision.CONTINUE
    if stopped:
        if x_total != x1:
            raise DomainError(
                f"trial stopped at stage 1 with {x1} responses; x_total={x_total} is inconsistent"
            )
        return Decision.FUTILITY_STOPPED
    if not (x1 <= x_total <= design.n):
        raise DomainError(f"x_total must lie in [{x1}, {design.n}], got {x_total}")
    return Decision.EFFICACIOUS if x_total > design.r else Decision.NOT_PROMISING


def simon_oc(
    design: SimonDesign, scenario: Scenario, bonferroni_B: int
) -> OperatingCharacteristics:
    """Exact operating characteristics when each basket runs the design
    independently. Baskets are independent, so the family-wise error rate is
    one minus the product of per-null-basket non-rejection probabilities."""
    if len(scenario.true_rates) != bonferroni_B:
        raise DomainError(
            f"scenario covers {len(scenario.true_rates)} baskets, expected {bonferroni_B}"
        )
    rates = tuple(reject_probability(design, p) for p in scenario.true_rates)
    null_rates = [r for r, prom in zip(rates, scenario.promising) if not prom]
    fwer = None
    if null_rates:
        keep = 1.0
        for r in null_rates:
            keep *= 1.0 - r
        fwer = 1.0 - keep
    if any(scenario.promising):
        promising_rates = [r for r, prom in zip(rates, scenario.promising) if prom]
        trialwise = float(np.mean(promising_rates))  # equal basket sizes by construction
    else:
        trialwise = None
    expected_n = tuple(expected_size(design, p) for p in scenario.true_rates)
    return OperatingCharacteristics(
        per_basket_reject_rate=rates,
        fwer=fwer,
        trialwise_power=trialwise,
        expected_n=expected_n,
        n_sims=None,
        seed=None,
    )
