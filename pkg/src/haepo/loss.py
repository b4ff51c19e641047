"""Listwise trajectory loss: Plackett-Luce weights, entropy and KL
regularization, and the exact analytic gradient in log-likelihood space.

The loss consumes one batch of per-trajectory cumulative log-likelihoods L
(current policy), L_ref (frozen reference policy, same trajectories), and
returns R. Gradients are exposed in L-space; `chain_to_policy` combines them
with per-trajectory parameter gradients, so the same core serves tabular and
MLP policies and lets the finite-difference verifier probe (L, L_ref, R)
directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajectory import NormalizationMode, normalize_rewards


@dataclass
class PLWeights:
    """Simplex weights over a batch of trajectories, with their logs."""

    w: np.ndarray
    log_w: np.ndarray


@dataclass
class LossConfig:
    beta_ent: float = 0.0
    lambda_kl: float = 0.0
    norm_mode: NormalizationMode = NormalizationMode.NONE
    baseline: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.beta_ent) and self.beta_ent >= 0.0):
            raise ValueError(f"beta_ent must be finite and >= 0, got {self.beta_ent}")
        if not (np.isfinite(self.lambda_kl) and self.lambda_kl >= 0.0):
            raise ValueError(f"lambda_kl must be finite and >= 0, got {self.lambda_kl}")


@dataclass
class LossBreakdown:
    reward_term: float
    entropy_term: float
    kl_term: float
    total: float
    grad_L: np.ndarray
    D: np.ndarray


def pl_weights(L: np.ndarray) -> PLWeights:
    """Softmax of cumulative log-likelihoods, max-shifted for stability.

    Any finite L produces a finite simplex vector, e.g. L around -500 from
    500-step episodes.
    """
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 1 or L.size < 1:
        raise ValueError("L must be a 1-d vector of length >= 1")
    if not np.all(np.isfinite(L)):
        raise ValueError("non-finite log-likelihood")
    shifted = L - np.max(L)
    exp = np.exp(shifted)
    total = np.sum(exp)
    w = exp / total
    log_w = shifted - np.log(total)
    return PLWeights(w=w, log_w=log_w)


def pl_weight_jacobian(weights: PLWeights) -> np.ndarray:
    """Jacobian of the weights w.r.t. L: J[k, j] = w_k (delta_kj - w_j).

    Every column sums to zero (the weights stay on the simplex).
    """
    w = weights.w
    return np.diag(w) - np.outer(w, w)


def _weight_divergence(weights: PLWeights, ref_weights: PLWeights) -> np.ndarray:
    return weights.log_w - ref_weights.log_w


def _grad_from_coefficients(w: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    """L-space gradient of -sum_k w_k c_k for coefficients treated as
    constants plus the weight-entropy chain terms folded into c.

    grad[i] = -w_i (c_i - sum_k w_k c_k); the weighted mean subtraction is
    the simplex-tangency identity, so the components always sum to zero.
    """
    mean = float(np.dot(w, coeff))
    return -w * (coeff - mean)


def haepo_loss(
    L: np.ndarray,
    L_ref: np.ndarray,
    R: np.ndarray,
    cfg: LossConfig,
) -> LossBreakdown:
    """Three-term listwise objective and its analytic L-space gradient.

    total = -sum_k w_k R~_k + beta sum_k w_k log w_k
            + lambda sum_k w_k (log w_k - log w_k_ref)

    Normalized returns are treated as constants during differentiation and
    L_ref is held fixed.
    """
    L = np.asarray(L, dtype=np.float64)
    L_ref = np.asarray(L_ref, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if not (L.shape == L_ref.shape == R.shape):
        raise ValueError(
            f"length mismatch: L {L.shape}, L_ref {L_ref.shape}, R {R.shape}"
        )

    weights = pl_weights(L)
    ref_weights = pl_weights(L_ref)
    w, log_w = weights.w, weights.log_w
    D = _weight_divergence(weights, ref_weights)
    R_norm = normalize_rewards(R, cfg.norm_mode, baseline=cfg.baseline)

    reward_term = -float(np.dot(w, R_norm))
    entropy_term = cfg.beta_ent * float(np.dot(w, log_w))
    kl_term = cfg.lambda_kl * float(np.dot(w, D))
    total = reward_term + entropy_term + kl_term

    # Per-trajectory coefficient R~_k - beta (1 + log w_k) - lambda D_k; the
    # "+1" cancels under tangency but is kept so the cancellation can be
    # asserted in tests rather than assumed.
    coeff = R_norm - cfg.beta_ent * (1.0 + log_w) - cfg.lambda_kl * D
    grad_L = _grad_from_coefficients(w, coeff)

    return LossBreakdown(
        reward_term=reward_term,
        entropy_term=entropy_term,
        kl_term=kl_term,
        total=total,
        grad_L=grad_L,
        D=D,
    )


def haepo_gradient(
    L: np.ndarray,
    L_ref: np.ndarray,
    R: np.ndarray,
    cfg: LossConfig,
) -> np.ndarray:
    """Exact gradient of the total loss w.r.t. L (L_ref and R~ held fixed)."""
    return haepo_loss(L, L_ref, R, cfg).grad_L


def haepo_gradient_ref(
    L: np.ndarray,
    L_ref: np.ndarray,
    cfg: LossConfig,
) -> np.ndarray:
    """Exact gradient of the total loss w.r.t. the reference log-likelihoods.

    Only the KL term touches L_ref: d/dL_ref_k of -lambda sum_i w_i log
    w_i_ref collapses to lambda (w_ref_k - w_k).
    """
    weights = pl_weights(np.asarray(L, dtype=np.float64))
    ref_weights = pl_weights(np.asarray(L_ref, dtype=np.float64))
    return cfg.lambda_kl * (ref_weights.w - weights.w)


def gradient_decomposition(
    L: np.ndarray,
    L_ref: np.ndarray,
    R: np.ndarray,
    cfg: LossConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """L-space gradients of the three loss summands separately.

    Returns (reward_force, entropy_force, kl_force); their elementwise sum
    is the full gradient.
    """
    L = np.asarray(L, dtype=np.float64)
    L_ref = np.asarray(L_ref, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if not (L.shape == L_ref.shape == R.shape):
        raise ValueError(
            f"length mismatch: L {L.shape}, L_ref {L_ref.shape}, R {R.shape}"
        )
    weights = pl_weights(L)
    ref_weights = pl_weights(L_ref)
    w, log_w = weights.w, weights.log_w
    D = _weight_divergence(weights, ref_weights)
    R_norm = normalize_rewards(R, cfg.norm_mode, baseline=cfg.baseline)

    reward_force = _grad_from_coefficients(w, R_norm)
    entropy_force = _grad_from_coefficients(w, -cfg.beta_ent * (1.0 + log_w))
    kl_force = _grad_from_coefficients(w, -cfg.lambda_kl * D)
    return reward_force, entropy_force, kl_force


def chain_to_policy(grad_L: np.ndarray, per_traj_param_grads) -> np.ndarray:
    """Chain an L-space gradient to policy parameters.

    `per_traj_param_grads[k]` holds the flat parameter gradient of trajectory
    k's cumulative log-likelihood; the result is sum_k grad_L[k] * that.
    """
    grad_L = np.asarray(grad_L, dtype=np.float64)
    grads = [np.asarray(g, dtype=np.float64) for g in per_traj_param_grads]
    if len(grads) != grad_L.size:
        raise ValueError(
            f"{grad_L.size} trajectory gradients expected, got {len(grads)}"
        )
    shapes = {g.shape for g in grads}
    if len(shapes) > 1:
        raise ValueError(f"inconsistent accumulator shapes: {sorted(shapes)}")
    stacked = np.stack(grads, axis=0)
    return np.tensordot(grad_L, stacked, axes=1)
