"""Benchmark environments behind a single reset/step interface.

All environments are deterministic given the rng stream: identical seed and
action sequence reproduce the identical trajectory. Tabular tasks expose an
integer state index as the observation; the cart-pole exposes its 4-vector.
"""

from __future__ import annotations

import math

import numpy as np


class GaussianBandit:
    """K-armed bandit; arm k pays N(mu_k, noise_std^2), mu_k ~ U[0,1] drawn
    once at construction and held fixed."""

    n_states = 1
    obs_dim = None

    def __init__(self, n_arms: int, rng, noise_std: float = 1.0):
        self.n_arms = n_arms
        self.noise_std = noise_std
        self.mu = rng.uniform(0.0, 1.0, size=n_arms)

    @property
    def n_actions(self) -> int:
        return self.n_arms

    def reset(self, rng) -> int:
        return 0

    def step(self, action: int, rng):
        if not (0 <= action < self.n_arms):
            raise IndexError(f"arm {action} outside [0, {self.n_arms})")
        reward = self.mu[action] + self.noise_std * rng.standard_normal()
        return 0, float(reward), True

    def per_step_regret(self, chosen_rewards) -> np.ndarray:
        """Realized per-pull regret: best arm mean minus the reward received."""
        r = np.asarray(chosen_rewards, dtype=np.float64)
        return float(np.max(self.mu)) - r

    def pseudo_regret(self, actions) -> np.ndarray:
        """Noiseless gap to the best arm mean (smoother than realized regret)."""
        a = np.asarray(actions, dtype=np.int64)
        return float(np.max(self.mu)) - self.mu[a]

    def uniform_policy_expected_regret(self) -> float:
        """Expected per-pull regret of the uniformly random policy."""
        return float(np.max(self.mu) - np.mean(self.mu))


class RandomWalkEnv:
    """One-dimensional walk of fixed length: the agent takes +1/-1 steps for
    max_steps and earns a single reward of 1 at the moment it first reaches
    +goal_distance. Episodes always run the full max_steps, so the batch of
    log-likelihood sums stays length-comparable; return is exactly 0 or 1.
    """

    n_states = 1
    obs_dim = None
    n_actions = 2

    def __init__(self, goal_distance: int, max_steps: int = 500):
        if goal_distance <= 0:
            raise ValueError("goal_distance must be positive")
        self.goal_distance = goal_distance
        self.max_steps = max_steps
        self.position = 0
        self._steps = 0
        self._succeeded = False

    def reset(self, rng) -> int:
        self.position = 0
        self._steps = 0
        self._succeeded = False
        return 0

    def step(self, action: int, rng):
        if action not in (0, 1):
            raise IndexError(f"action {action} outside {{0, 1}}")
        self.position += 1 if action == 1 else -1
        self._steps += 1
        reward = 0.0
        if not self._succeeded and self.position >= self.goal_distance:
            self._succeeded = True
            reward = 1.0
        done = self._steps >= self.max_steps
        return 0, reward, done


class ChainMdp:
    """Deterministic 5-step chain: advance or stay each step; reward 1 only
    if state 5 is reached, which requires advancing at every step."""

    length = 5
    n_states = 5
    obs_dim = None
    n_actions = 2
    ADVANCE = 0
    STAY = 1

    def __init__(self):
        self.state = 0
        self._steps = 0

    def reset(self, rng) -> int:
        self.state = 0
        self._steps = 0
        return 0

    def step(self, action: int, rng):
        if action not in (self.ADVANCE, self.STAY):
            raise IndexError(f"action {action} outside {{0, 1}}")
        if action == self.ADVANCE:
            self.state += 1
        self._steps += 1
        done = self._steps >= self.length
        reward = 1.0 if (done and self.state >= self.length) else 0.0
        obs = min(self.state, self.n_states - 1)
        return obs, reward, done


def poisson_by_inversion(lam: float, rng) -> int:
    """Poisson sample via sequential-search inversion.

    Reproducible across platforms from the same integer seed; fine for the
    small lambda used here.
    """
    u = rng.random()
    p = math.exp(-lam)
    cdf = p
    k = 0
    while u > cdf:
        k += 1
        p *= lam / k
        cdf += p
    return k


class NewsvendorEnv:
    """Single-period order-quantity problem: order q in {0..10}, observe
    Poisson demand, earn p*min(q,d) - c*q + v*max(q-d, 0)."""

    n_states = 1
    obs_dim = None
    n_actions = 11

    def __init__(self, price: float = 10.0, cost: float = 6.0,
                 salvage: float = 2.0, demand_mean: float = 5.0):
        self.price = price
        self.cost = cost
        self.salvage = salvage
        self.demand_mean = demand_mean

    def reset(self, rng) -> int:
        return 0

    def step(self, action: int, rng):
        if not (0 <= action < self.n_actions):
            raise IndexError(f"order {action} outside [0, {self.n_actions})")
        d = poisson_by_inversion(self.demand_mean, rng)
        profit = (
            self.price * min(action, d)
            - self.cost * action
            + self.salvage * max(action - d, 0)
        )
        return 0, float(profit), True


class CartPoleEnv:
    """Classic cart-pole balancing with the canonical published constants:
    gravity 9.8, cart mass 1.0, pole mass 0.1, half-length 0.5, force 10.0,
    Euler integration at 0.02 s, termination at |x| > 2.4 or |angle| > 12
    degrees, 500-step cap, +1 reward per surviving step."""

    n_states = None
    obs_dim = 4
    n_actions = 2

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    half_length = 0.5
    force_mag = 10.0
    tau = 0.02
    theta_threshold = 12.0 * math.pi / 180.0
    x_threshold = 2.4
    max_steps = 500

    def __init__(self):
        self.total_mass = self.masscart + self.masspole
        self.polemass_length = self.masspole * self.half_length
        self.state = np.zeros(4, dtype=np.float64)
        self._steps = 0
        self._done = False

    def reset(self, rng) -> np.ndarray:
        self.state = rng.uniform(-0.05, 0.05, size=4)
        self._steps = 0
        self._done = False
        return self.state.copy()

    def step(self, action: int, rng):
        if action not in (0, 1):
            raise IndexError(f"action {action} outside {{0, 1}}")
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        x, x_dot, theta, theta_dot = self.state
        force = self.force_mag if action == 1 else -self.force_mag
        costheta = math.cos(theta)
        sintheta = math.sin(theta)
        temp = (
            force + self.polemass_length * theta_dot**2 * sintheta
        ) / self.total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.half_length
            * (4.0 / 3.0 - self.masspole * costheta**2 / self.total_mass)
        )
        xacc = temp - self.polemass_length * thetaacc * costheta / self.total_mass

        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * xacc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * thetaacc
        self.state = np.array([x, x_dot, theta, theta_dot])
        self._steps += 1

        failed = abs(x) > self.x_threshold or abs(theta) > self.theta_threshold
        done = failed or self._steps >= self.max_steps
        self._done = done
        return self.state.copy(), 1.0, done


def make_env(name: str, rng, **params):
    """Construct an environment from a plain config record."""
    if name == "bandit":
        return GaussianBandit(n_arms=int(params.get("n_arms", 10)), rng=rng)
    if name == "random-walk":
        return RandomWalkEnv(
            goal_distance=int(params.get("goal_distance", 10)),
            max_steps=int(params.get("max_steps", 500)),
        )
    if name == "chain-mdp":
        return ChainMdp()
    if name == "newsvendor":
        return NewsvendorEnv()
    if name == "cartpole":
        return CartPoleEnv()
    raise ValueError(f"unknown environment: {name!r}")
