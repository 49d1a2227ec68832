"""Toy softmax policy over a candidate program pool, trained with REINFORCE
on group-normalized cohort rewards. Demonstrates that the cohort-gated reward
suppresses shortcut programs that only fit the original question."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data_model import CohortInstance
from .dsl import Program
from .evaluation import CohortOutcome, run_cohort
from .reward import (
    VARIANT_COHORT,
    VARIANT_NORMAL,
    CohortExecutionSummary,
    cohort_reward,
    group_advantages,
    rejection_penalty,
    retrieval_reward,
)
from .runtime import ExecutionLimits

MODE_COHORT = VARIANT_COHORT
MODE_NORMAL = VARIANT_NORMAL
MODE_ORG = "org"  # reward computed from the original member only

MODES = (MODE_COHORT, MODE_NORMAL, MODE_ORG)

ORG_ACCURACY_SCALE = 1.2  # full-cohort accuracy mass granted on one question


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


@dataclass
class ToyPolicy:
    logits: np.ndarray

    @classmethod
    def uniform(cls, size: int) -> "ToyPolicy":
        return cls(logits=np.zeros(size))

    @property
    def probabilities(self) -> np.ndarray:
        return softmax(self.logits)


@dataclass(frozen=True)
class ToyTrainConfig:
    rollouts_per_update: int = 5
    updates: int = 200
    learning_rate: float = 0.5
    mode: str = MODE_COHORT
    seed: int = 0
    advantage_epsilon: float = 1e-8

    def __post_init__(self):
        if self.rollouts_per_update < 2:
            raise ValueError("group advantages need at least 2 rollouts")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class UpdateRecord:
    cohort_index: int
    sampled: tuple[int, ...]
    rewards: tuple[float, ...]
    advantages: tuple[float, ...]
    probabilities_after: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "cohort_index": self.cohort_index,
            "sampled": list(self.sampled),
            "rewards": list(self.rewards),
            "advantages": list(self.advantages),
            "probabilities_after": list(self.probabilities_after),
        }


@dataclass
class TrainingLog:
    config: ToyTrainConfig
    updates: list[UpdateRecord] = field(default_factory=list)
    final_probabilities: tuple[float, ...] = ()
    kl_regularized: bool = False  # omitted by design in the toy


def mode_reward(outcome: CohortOutcome, mode: str) -> float:
    """Scalar reward for one rollout under the given reward mode."""
    summary = outcome.summary
    if mode in (MODE_COHORT, MODE_NORMAL):
        return cohort_reward(summary, variant=mode).total
    if mode == MODE_ORG:
        original = outcome.members[0]
        r_acc = ORG_ACCURACY_SCALE if original.correct else 0.0
        return r_acc + retrieval_reward(summary.n_calls) + rejection_penalty(int(original.rejected))
    raise ValueError(f"unknown mode {mode!r}")


def policy_gradient_step(
    logits: np.ndarray,
    sampled: Sequence[int],
    advantages: Sequence[float],
    learning_rate: float,
) -> np.ndarray:
    """Exact softmax score-function update for advantage-weighted log-prob.

    For each sampled index i: grad log pi(i) = onehot(i) - p, with p held
    fixed at the pre-update distribution; contributions sum over rollouts.
    """
    probs = softmax(logits)
    grad = np.zeros_like(logits)
    for i, adv in zip(sampled, advantages):
        grad -= adv * probs
        grad[i] += adv
    return logits + learning_rate * grad


def run_toy_training(
    config: ToyTrainConfig,
    pool: Sequence[Program],
    cohorts: Sequence[CohortInstance],
    retriever,
    limits: ExecutionLimits = ExecutionLimits(),
) -> TrainingLog:
    """Round-robin over cohorts; sample rollouts, reward, normalize, update."""
    if not pool:
        raise ValueError("empty candidate pool")
    if not cohorts:
        raise ValueError("empty cohort list")
    rng = np.random.default_rng(config.seed)
    policy = ToyPolicy.uniform(len(pool))
    log = TrainingLog(config=config)
    # deterministic retriever => outcomes are pure in (program, cohort)
    outcome_cache: dict[tuple[int, int], CohortOutcome] = {}

    for update_index in range(config.updates):
        cohort_index = update_index % len(cohorts)
        cohort = cohorts[cohort_index]
        probs = policy.probabilities
        sampled = rng.choice(len(pool), size=config.rollouts_per_update, p=probs)
        rewards = []
        for program_index in sampled:
            key = (int(program_index), cohort_index)
            if key not in outcome_cache:
                outcome_cache[key] = run_cohort(pool[key[0]], cohort, retriever, limits)
            rewards.append(mode_reward(outcome_cache[key], config.mode))
        group = group_advantages(rewards, epsilon=config.advantage_epsilon)
        policy.logits = policy_gradient_step(
            policy.logits, [int(i) for i in sampled], group.advantages, config.learning_rate
        )
        log.updates.append(
            UpdateRecord(
                cohort_index=cohort_index,
                sampled=tuple(int(i) for i in sampled),
                rewards=group.rewards,
                advantages=group.advantages,
                probabilities_after=tuple(policy.probabilities.tolist()),
            )
        )
    log.final_probabilities = tuple(policy.probabilities.tolist())
    return log


def compare_variants(
    pool: Sequence[Program],
    cohorts: Sequence[CohortInstance],
    retriever,
    config_base: ToyTrainConfig,
    limits: ExecutionLimits = ExecutionLimits(),
) -> dict[str, TrainingLog]:
    """Train under cohort, normal, and org reward modes with a shared seed."""
    results = {}
    for mode in MODES:
        config = ToyTrainConfig(
            rollouts_per_update=config_base.rollouts_per_update,
            updates=config_base.updates,
            learning_rate=config_base.learning_rate,
            mode=mode,
            seed=config_base.seed,
            advantage_epsilon=config_base.advantage_epsilon,
        )
        results[mode] = run_toy_training(config, pool, cohorts, retriever, limits)
    return results
