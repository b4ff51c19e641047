"""Discrete-action policies, log-likelihood gradients, and optimizers.

Both policy classes share one informal interface: `action_distribution`,
`step_log_probs` (replay stored state-action pairs under the current
parameters), `grad_weighted_log_probs` (weighted sum of per-step score
gradients, flat), and flat `param_vector` / `set_param_vector` accessors used
for snapshots, optimizers, and checkpoints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .trajectory import TrajectoryRecord


class NonFiniteGradientError(RuntimeError):
    """Raised when an update would apply a NaN or infinite gradient."""


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


class TabularSoftmaxPolicy:
    """Softmax policy over a logit table indexed by (state, action).

    Bandit-style environments use a single state row. Logits start at zero,
    i.e. uniform action probabilities and maximal initial entropy.
    """

    def __init__(self, n_states: int, n_actions: int):
        self.n_states = n_states
        self.n_actions = n_actions
        self.logits = np.zeros((n_states, n_actions), dtype=np.float64)
        self._version = 0
        self._cache_version = -1
        self._dist_cache = None
        self._log_dist_cache = None

    @property
    def n_params(self) -> int:
        return self.logits.size

    def _tables(self):
        # Sampling and replay hit every state repeatedly while parameters are
        # frozen, so the softmax tables are recomputed once per update.
        if self._dist_cache is None or self._cache_version != self._version:
            self._dist_cache = softmax(self.logits)
            self._log_dist_cache = log_softmax(self.logits)
            self._cache_version = self._version
        return self._dist_cache, self._log_dist_cache

    def action_distribution(self, state: int) -> np.ndarray:
        if not (0 <= state < self.n_states):
            raise IndexError(f"state {state} outside [0, {self.n_states})")
        dist, _ = self._tables()
        return dist[state]

    def step_log_probs(self, states, actions) -> np.ndarray:
        _, log_dist = self._tables()
        s = np.asarray(states, dtype=np.int64)
        a = np.asarray(actions, dtype=np.int64)
        return log_dist[s, a]

    def grad_weighted_log_probs(self, states, actions, weights) -> np.ndarray:
        """Flat gradient of sum_t weights_t * log pi(a_t | s_t).

        Closed form per visited state: weight * (indicator - probability).
        """
        dist, _ = self._tables()
        s = np.asarray(states, dtype=np.int64)
        a = np.asarray(actions, dtype=np.int64)
        c = np.asarray(weights, dtype=np.float64)
        grad = np.zeros_like(self.logits)
        np.add.at(grad, (s, a), c)
        np.subtract.at(grad, (s,), c[:, None] * dist[s])
        return grad.ravel()

    def param_vector(self) -> np.ndarray:
        return self.logits.ravel().copy()

    def set_param_vector(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != self.logits.size:
            raise ValueError(f"expected {self.logits.size} parameters, got {theta.size}")
        self.logits = theta.reshape(self.logits.shape).copy()
        self._bump_version()

    def clone(self) -> "TabularSoftmaxPolicy":
        other = TabularSoftmaxPolicy(self.n_states, self.n_actions)
        other.logits = self.logits.copy()
        return other

    def _bump_version(self):
        self._version += 1


class MlpPolicy:
    """Two-layer MLP policy: obs -> hidden (ReLU) -> action logits.

    Weights start uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    The ReLU subgradient at exactly zero is taken as zero.
    """

    def __init__(self, obs_dim: int, n_actions: int, hidden: int = 128, rng=None):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.hidden = hidden
        rng = rng if rng is not None else np.random.default_rng(0)
        b1 = 1.0 / np.sqrt(obs_dim)
        b2 = 1.0 / np.sqrt(hidden)
        self.W1 = rng.uniform(-b1, b1, size=(obs_dim, hidden))
        self.b1 = np.zeros(hidden, dtype=np.float64)
        self.W2 = rng.uniform(-b2, b2, size=(hidden, n_actions))
        self.b2 = np.zeros(n_actions, dtype=np.float64)

    @property
    def n_params(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + self.b2.size

    def _logits(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = np.maximum(obs @ self.W1 + self.b1, 0.0)
        return h @ self.W2 + self.b2, h

    def action_distribution(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        logits, _ = self._logits(obs)
        return softmax(logits)

    def step_log_probs(self, states, actions) -> np.ndarray:
        obs = np.asarray(states, dtype=np.float64).reshape(len(states), self.obs_dim)
        a = np.asarray(actions, dtype=np.int64)
        logits, _ = self._logits(obs)
        return log_softmax(logits)[np.arange(len(a)), a]

    def grad_weighted_log_probs(self, states, actions, weights) -> np.ndarray:
        """Reverse-mode gradient of sum_t weights_t * log pi(a_t | obs_t)."""
        obs = np.asarray(states, dtype=np.float64).reshape(len(states), self.obs_dim)
        a = np.asarray(actions, dtype=np.int64)
        c = np.asarray(weights, dtype=np.float64)

        logits, h = self._logits(obs)
        probs = softmax(logits)
        d_logits = -probs * c[:, None]
        d_logits[np.arange(len(a)), a] += c

        dW2 = h.T @ d_logits
        db2 = d_logits.sum(axis=0)
        dh = d_logits @ self.W2.T
        dh[h <= 0.0] = 0.0
        dW1 = obs.T @ dh
        db1 = dh.sum(axis=0)
        return np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2])

    def param_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.W1.ravel(), self.b1, self.W2.ravel(), self.b2]
        )

    def set_param_vector(self, theta: np.ndarray) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        i = 0
        for name, shape in (
            ("W1", (self.obs_dim, self.hidden)),
            ("b1", (self.hidden,)),
            ("W2", (self.hidden, self.n_actions)),
            ("b2", (self.n_actions,)),
        ):
            n = int(np.prod(shape))
            setattr(self, name, theta[i : i + n].reshape(shape).copy())
            i += n

    def clone(self) -> "MlpPolicy":
        other = MlpPolicy.__new__(MlpPolicy)
        other.obs_dim = self.obs_dim
        other.n_actions = self.n_actions
        other.hidden = self.hidden
        other.W1 = self.W1.copy()
        other.b1 = self.b1.copy()
        other.W2 = self.W2.copy()
        other.b2 = self.b2.copy()
        return other


def grad_log_likelihood(policy, traj: TrajectoryRecord) -> np.ndarray:
    """Flat gradient of the trajectory's cumulative log-likelihood."""
    ones = np.ones(len(traj), dtype=np.float64)
    return policy.grad_weighted_log_probs(traj.states, traj.actions, ones)


def log_likelihood(policy, traj: TrajectoryRecord) -> float:
    """Cumulative log-likelihood of stored state-action pairs under the
    policy's current parameters (used to score the same batch under a
    reference snapshot)."""
    return float(np.sum(policy.step_log_probs(traj.states, traj.actions)))


def sample_trajectory(policy, env, rng, max_steps: int) -> TrajectoryRecord:
    """Roll out one episode, recording the log-prob of each sampled action."""
    states, actions, rewards, log_probs = [], [], [], []
    obs = env.reset(rng)
    for _ in range(max_steps):
        dist = policy.action_distribution(obs)
        u = rng.random()
        action = int(np.searchsorted(np.cumsum(dist), u))
        action = min(action, len(dist) - 1)
        states.append(obs)
        actions.append(action)
        log_probs.append(np.log(dist[action]))
        obs, reward, done = env.step(action, rng)
        rewards.append(reward)
        if done:
            break
    return TrajectoryRecord(
        states=states,
        actions=np.array(actions),
        rewards=np.array(rewards),
        step_log_probs=np.array(log_probs),
    )


@dataclass
class OptimizerState:
    """First-order optimizer with optional global gradient-norm clipping."""

    mode: str = "sgd"  # "sgd" or "adam"
    learning_rate: float = 1e-2
    max_grad_norm: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer mode: {self.mode!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_grad_norm is not None and not self.max_grad_norm > 0:
            raise ValueError("max_grad_norm must be positive when set")


def clip_gradient(grad: np.ndarray, max_norm: float | None) -> np.ndarray:
    if max_norm is None:
        return grad
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def apply_update(policy, grad: np.ndarray, opt: OptimizerState) -> None:
    """One descent step on the policy's flat parameter vector."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError("non-finite gradient, update aborted")
    theta = policy.param_vector()
    if grad.shape != theta.shape:
        raise ValueError(f"gradient shape {grad.shape} != params {theta.shape}")
    grad = clip_gradient(grad, opt.max_grad_norm)

    if opt.mode == "sgd":
        theta = theta - opt.learning_rate * grad
    else:
        if opt.m is None:
            opt.m = np.zeros_like(theta)
            opt.v = np.zeros_like(theta)
        opt.step_count += 1
        opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad
        opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad * grad
        m_hat = opt.m / (1.0 - opt.beta1**opt.step_count)
        v_hat = opt.v / (1.0 - opt.beta2**opt.step_count)
        theta = theta - opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.eps)
    policy.set_param_vector(theta)


def save_params(policy, path) -> None:
    """Write the flat parameter vector as JSON (checkpoint / reference)."""
    with open(path, "w") as fh:
        json.dump(policy.param_vector().tolist(), fh)


def load_params(policy, path) -> None:
    with open(path) as fh:
        policy.set_param_vector(np.array(json.load(fh), dtype=np.float64))
