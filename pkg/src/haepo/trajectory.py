"""Trajectory records, per-trajectory scores, and batch reward normalization."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


class NormalizationMode(enum.Enum):
    SUM = "sum"
    ZSCORE = "zscore"
    NONE = "none"


@dataclass
class TrajectoryRecord:
    """One complete episode.

    All four sequences are aligned step by step and share the same length.
    `states` holds whatever observation type the policy consumes (int index
    for tabular policies, float vector for the MLP).
    """

    states: list
    actions: np.ndarray
    rewards: np.ndarray
    step_log_probs: np.ndarray

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.step_log_probs = np.asarray(self.step_log_probs, dtype=np.float64)
        n = len(self.states)
        if not (n == len(self.actions) == len(self.rewards) == len(self.step_log_probs)):
            raise ValueError(
                f"misaligned trajectory: {n} states, {len(self.actions)} actions, "
                f"{len(self.rewards)} rewards, {len(self.step_log_probs)} log-probs"
            )
        if n < 1:
            raise ValueError("trajectory must contain at least one step")
        if not np.all(np.isfinite(self.step_log_probs)):
            raise ValueError("non-finite step log-probability")

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class BatchScores:
    """Per-trajectory cumulative log-likelihoods and discounted returns."""

    L: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        if self.L.shape != self.R.shape or self.L.ndim != 1 or self.L.size < 1:
            raise ValueError("L and R must be 1-d vectors of equal length >= 1")
        if not (np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.R))):
            raise ValueError("non-finite batch score")

    @property
    def M(self) -> int:
        return self.L.size


def cumulative_log_likelihood(traj: TrajectoryRecord) -> float:
    """Sum of the per-step action log-probabilities of one episode."""
    lp = traj.step_log_probs
    if not np.all(np.isfinite(lp)):
        raise ValueError("non-finite step log-probability")
    return float(np.sum(lp))


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Discounted sum of rewards, gamma^(t-1) weighting from the first step."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    r = np.asarray(rewards, dtype=np.float64)
    if r.size == 0:
        return 0.0
    discounts = np.power(gamma, np.arange(r.size, dtype=np.float64))
    return float(np.dot(discounts, r))


def degenerate_batch(R: np.ndarray, mode: NormalizationMode) -> bool:
    """Whether normalization would divide by zero on this batch.

    SUM degenerates when the batch sum is zero, ZSCORE when all returns are
    equal. Such batches carry no learning signal.
    """
    R = np.asarray(R, dtype=np.float64)
    if mode is NormalizationMode.SUM:
        return float(np.sum(R)) == 0.0
    if mode is NormalizationMode.ZSCORE:
        return float(np.std(R)) == 0.0
    return False


def normalize_rewards(
    R: np.ndarray,
    mode: NormalizationMode,
    baseline: float = 0.0,
) -> np.ndarray:
    """Rescale a batch of returns.

    SUM divides each return by the batch sum (after subtracting the optional
    scalar baseline), ZSCORE centers and whitens with the population standard
    deviation, NONE passes through. A degenerate batch (zero sum / zero
    spread) yields an all-zeros vector: zero rewards translate to a zero
    reward-term gradient, which is a safe no-op update.
    """
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 1 or R.size < 1:
        raise ValueError("R must be a 1-d vector of length >= 1")
    if mode is NormalizationMode.NONE:
        return R.copy()
    if mode is NormalizationMode.SUM:
        shifted = R - baseline
        total = float(np.sum(shifted))
        if total == 0.0:
            logger.debug("degenerate batch: zero return sum, emitting zeros")
            return np.zeros_like(R)
        return shifted / total
    if mode is NormalizationMode.ZSCORE:
        mu = float(np.mean(R))
        sigma = float(np.std(R))  # population (divide by M)
        if sigma == 0.0:
            logger.debug("degenerate batch: constant returns, emitting zeros")
            return np.zeros_like(R)
        return (R - mu) / sigma
    raise ValueError(f"unknown normalization mode: {mode!r}")


def batch_scores(
    trajectories: Sequence[TrajectoryRecord], gamma: float
) -> BatchScores:
    """Score a batch of episodes from their stored log-probs and rewards."""
    L = np.array([cumulative_log_likelihood(t) for t in trajectories])
    R = np.array([discounted_return(t.rewards, gamma) for t in trajectories])
    return BatchScores(L=L, R=R)
