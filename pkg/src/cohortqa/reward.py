"""Composite cohort reward (accuracy + retrieval usage + rejection penalty)
and group-relative advantage normalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import COHORT_SIZE

VARIANT_COHORT = "cohort"
VARIANT_NORMAL = "normal"

ACCURACY_PER_QUESTION = 0.2
COHORT_GATE_MIN_CORRECT = 4
RETRIEVAL_BONUS = 0.6
REJECTION_PENALTY_PER_QUESTION = 0.1


@dataclass(frozen=True)
class CohortExecutionSummary:
    n_correct: int
    n_calls: int
    n_rejected: int

    def __post_init__(self):
        if not 0 <= self.n_correct <= COHORT_SIZE:
            raise ValueError(f"n_correct {self.n_correct} outside [0, {COHORT_SIZE}]")
        if self.n_calls < 0:
            raise ValueError(f"n_calls {self.n_calls} negative")
        if not 0 <= self.n_rejected <= COHORT_SIZE:
            raise ValueError(f"n_rejected {self.n_rejected} outside [0, {COHORT_SIZE}]")


@dataclass(frozen=True)
class RewardBreakdown:
    r_acc: float
    r_ret: float
    r_rej: float
    total: float
    variant: str

    def to_json(self) -> dict:
        return {
            "r_acc": self.r_acc,
            "r_ret": self.r_ret,
            "r_rej": self.r_rej,
            "total": self.total,
            "variant": self.variant,
        }


def accuracy_reward(n_correct: int, variant: str = VARIANT_NORMAL) -> float:
    """0.2 per correct member; the cohort variant gates on >= 4 of 6 correct."""
    if not 0 <= n_correct <= COHORT_SIZE:
        raise ValueError(f"n_correct {n_correct} outside [0, {COHORT_SIZE}]")
    if variant == VARIANT_COHORT and n_correct < COHORT_GATE_MIN_CORRECT:
        return 0.0
    if variant not in (VARIANT_COHORT, VARIANT_NORMAL):
        raise ValueError(f"unknown variant {variant!r}")
    return ACCURACY_PER_QUESTION * n_correct


def retrieval_reward(n_calls: int) -> float:
    """-0.6 for zero calls, 0 for one, +0.6 for more than one."""
    if n_calls < 0:
        raise ValueError(f"n_calls {n_calls} negative")
    if n_calls == 0:
        return -RETRIEVAL_BONUS
    if n_calls == 1:
        return 0.0
    return RETRIEVAL_BONUS


def rejection_penalty(n_rejected: int) -> float:
    """-0.1 per cohort member whose execution had a rejected retrieve."""
    if not 0 <= n_rejected <= COHORT_SIZE:
        raise ValueError(f"n_rejected {n_rejected} outside [0, {COHORT_SIZE}]")
    return -REJECTION_PENALTY_PER_QUESTION * n_rejected


def cohort_reward(summary: CohortExecutionSummary, variant: str = VARIANT_NORMAL) -> RewardBreakdown:
    r_acc = accuracy_reward(summary.n_correct, variant)
    r_ret = retrieval_reward(summary.n_calls)
    r_rej = rejection_penalty(summary.n_rejected)
    return RewardBreakdown(
        r_acc=r_acc, r_ret=r_ret, r_rej=r_rej, total=r_acc + r_ret + r_rej, variant=variant
    )


@dataclass(frozen=True)
class GroupAdvantages:
    rewards: tuple[float, ...]
    advantages: tuple[float, ...]
    epsilon: float


def group_advantages(
    rewards: Sequence[float],
    epsilon: float = 1e-8,
    normalize: str = "std",
) -> GroupAdvantages:
    """a_i = (r_i - mean) / (std + epsilon), population std.

    normalize="mean" centers without rescaling (the alternative group-relative
    convention); an all-equal group yields all-zero advantages either way.
    """
    if len(rewards) == 0:
        raise ValueError("rewards must be non-empty")
    arr = np.asarray(rewards, dtype=float)
    centered = arr - arr.mean()
    if normalize == "std":
        advantages = centered / (arr.std() + epsilon)
    elif normalize == "mean":
        advantages = centered
    else:
        raise ValueError(f"unknown normalization {normalize!r}")
    return GroupAdvantages(
        rewards=tuple(arr.tolist()),
        advantages=tuple(advantages.tolist()),
        epsilon=epsilon,
    )
