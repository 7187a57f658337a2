"""Joint allocation of per-service downscaling factors under a byte budget.

A joint action assigns one factor from the admissible set D to each of
the S services; the reward is the weighted mean of the services'
normalized qualities, or -1 when the total byte cost exceeds the budget.
Solvers: an exhaustive oracle (ground truth), a marginal-gain greedy
heuristic, a uniform-random baseline, and a single-step DQN whose action
space is the flat index over D^S.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelConfig, budget_check
from .codec import encoded_cost
from .errors import DomainError, ShapeError, TooLargeError
from .extractors import extract
from .generation import GenerationBackend, ServiceSpec, Surrogate, reconstruct_and_score, score_semantic
from .image import SemanticMap
from .qnet import Mlp, SgdMomentum, td_loss_and_gradients

JOINT_ACTION_GUARD = 4096


@dataclass(frozen=True, eq=False)
class AllocationInstance:
    """S services with their source images, the factor set D, and the channel."""

    services: tuple[ServiceSpec, ...]
    images: tuple[SemanticMap, ...]
    factors: tuple[int, ...]
    channel: ChannelConfig

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.services:
            raise DomainError("need at least one service")
        if len(self.services) != len(self.images):
            raise DomainError(f"{len(self.services)} services but {len(self.images)} images")
        if not self.factors or any(d < 1 for d in self.factors):
            raise DomainError(f"factors must be positive integers, got {self.factors}")
        if list(self.factors) != sorted(set(self.factors)):
            raise DomainError(f"factors must be strictly increasing, got {self.factors}")
        if len(self.factors) ** len(self.services) > JOINT_ACTION_GUARD:
            raise TooLargeError(
                f"joint action space |D|^S = {len(self.factors)}^{len(self.services)} "
                f"exceeds the guard of {JOINT_ACTION_GUARD}"
            )

    @property
    def n_services(self) -> int:
        return len(self.services)

    @property
    def n_actions(self) -> int:
        return len(self.factors) ** len(self.services)

    @cached_property
    def semantic_maps(self) -> tuple[SemanticMap, ...]:
        """Each service's extracted map; extraction is pure, so cache it."""
        return tuple(
            extract(svc.extractor, img, image_id=svc.id)
            for svc, img in zip(self.services, self.images)
        )

    @cached_property
    def cost_table(self) -> np.ndarray:
        """Byte cost of service s at factor index j, shape (S, |D|)."""
        return np.array(
            [
                [encoded_cost(img.width, img.height, d) for d in self.factors]
                for img in self.images
            ],
            dtype=np.int64,
        )

    @cached_property
    def state_vector(self) -> np.ndarray:
        """Per service mean/variance/relative-size of its semantic map, plus budget headroom.

        The budget is normalized by the cost of sending every service
        uncompressed, clipped to [0, 1]; dimension is 3S + 1.
        """
        max_pixels = max(img.width * img.height for img in self.images)
        feats = []
        for img, smap in zip(self.images, self.semantic_maps):
            feats.extend(
                [float(smap.pixels.mean()), float(smap.pixels.var()), img.width * img.height / max_pixels]
            )
        full_cost = sum(encoded_cost(img.width, img.height, 1) for img in self.images)
        feats.append(min(self.channel.budget_bytes / full_cost, 1.0))
        return np.clip(np.array(feats), 0.0, 1.0)


def encode_action(action, factors) -> int:
    """Flat index of a factor tuple; service 0 is the most significant digit."""
    base = len(factors)
    pos = {d: i for i, d in enumerate(factors)}
    index = 0
    for d in action:
        if d not in pos:
            raise DomainError(f"factor {d} not in admissible set {list(factors)}")
        index = index * base + pos[d]
    return index


def decode_action(index: int, factors, n_services: int) -> tuple[int, ...]:
    """Inverse of encode_action over the same mixed-radix layout."""
    base = len(factors)
    if not 0 <= index < base**n_services:
        raise DomainError(f"action index {index} out of range for {base}^{n_services} actions")
    digits = []
    for _ in range(n_services):
        digits.append(factors[index % base])
        index //= base
    return tuple(reversed(digits))


def weighted_quality(weights, qualities) -> float:
    """Aggregate reward on the feasible set: weighted mean of qualities."""
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(weights * np.asarray(qualities, dtype=float)) / np.sum(weights))


@dataclass(frozen=True)
class QualityReport:
    service_id: str
    factor: int
    quality: float
    cost_bytes: int


@dataclass(frozen=True)
class ActionEvaluation:
    reward: float
    reports: tuple[QualityReport, ...]
    total_bytes: int
    feasible: bool


def _service_quality(
    inst: AllocationInstance, s: int, d: int, backend: GenerationBackend, rng: np.random.Generator
) -> float:
    if isinstance(backend, Surrogate):
        return score_semantic(inst.services[s], inst.semantic_maps[s], d, rng)
    return reconstruct_and_score(inst.services[s], inst.images[s], d, backend, rng)


def evaluate_action(
    inst: AllocationInstance,
    action,
    backend: GenerationBackend,
    rng: np.random.Generator,
) -> ActionEvaluation:
    """Score one joint action; infeasible actions earn -1 but still report qualities."""
    action = tuple(action)
    if len(action) != inst.n_services:
        raise DomainError(f"action has {len(action)} factors for {inst.n_services} services")
    pos = {d: i for i, d in enumerate(inst.factors)}
    if any(d not in pos for d in action):
        raise DomainError(f"action {action} leaves the admissible set {list(inst.factors)}")
    costs = [int(inst.cost_table[s, pos[d]]) for s, d in enumerate(action)]
    check = budget_check(costs, inst.channel)
    qualities = [_service_quality(inst, s, d, backend, rng) for s, d in enumerate(action)]
    reports = tuple(
        QualityReport(service_id=svc.id, factor=d, quality=q, cost_bytes=c)
        for svc, d, q, c in zip(inst.services, action, qualities, costs)
    )
    weights = [svc.weight for svc in inst.services]
    reward = weighted_quality(weights, qualities) if check.feasible else -1.0
    return ActionEvaluation(reward=reward, reports=reports, total_bytes=check.total, feasible=check.feasible)


def quality_table(
    inst: AllocationInstance, backend: GenerationBackend, rng: np.random.Generator
) -> np.ndarray:
    """Quality of service s at factor index j, shape (S, |D|).

    Each (s, j) cell gets its own stream spawned in a fixed order, so any
    solver building the table from an identically seeded generator sees
    identical values.
    """
    streams = rng.spawn(inst.n_services * len(inst.factors))
    table = np.empty((inst.n_services, len(inst.factors)))
    k = 0
    for s in range(inst.n_services):
        for j, d in enumerate(inst.factors):
            table[s, j] = _service_quality(inst, s, d, backend, streams[k])
            k += 1
    return table


def _table_reward(inst: AllocationInstance, table: np.ndarray, positions) -> float:
    total = int(sum(inst.cost_table[s, j] for s, j in enumerate(positions)))
    if total > inst.channel.budget_bytes:
        return -1.0
    weights = [svc.weight for svc in inst.services]
    return weighted_quality(weights, [table[s, j] for s, j in enumerate(positions)])


@dataclass(frozen=True)
class AllocationResult:
    action: tuple[int, ...]
    reward: float


def action_rewards(
    inst: AllocationInstance, backend: GenerationBackend, rng: np.random.Generator
) -> np.ndarray:
    """Reward of every joint action, indexed by the flat action index."""
    table = quality_table(inst, backend, rng)
    base = len(inst.factors)
    rewards = np.empty(inst.n_actions)
    for index in range(inst.n_actions):
        positions = []
        rem = index
        for _ in range(inst.n_services):
            positions.append(rem % base)
            rem //= base
        rewards[index] = _table_reward(inst, table, tuple(reversed(positions)))
    return rewards


def exhaustive_oracle(
    inst: AllocationInstance, backend: GenerationBackend, rng: np.random.Generator
) -> AllocationResult:
    """Enumerate all joint actions; ties go to the lexicographically smallest tuple."""
    rewards = action_rewards(inst, backend, rng)
    best = int(np.argmax(rewards))  # first maximum = smallest index = lexicographic min
    return AllocationResult(
        action=decode_action(best, inst.factors, inst.n_services), reward=float(rewards[best])
    )


def greedy_allocate(
    inst: AllocationInstance, backend: GenerationBackend, rng: np.random.Generator
) -> AllocationResult:
    """Start everything at max(D); repeatedly buy the best quality-per-byte upgrade.

    A move lowers one service's factor to the next smaller admissible
    value; only budget-feasible moves with a strict quality gain are
    considered, ranked by gain per extra byte.
    """
    table = quality_table(inst, backend, rng)
    last = len(inst.factors) - 1
    positions = [last] * inst.n_services
    total = int(sum(inst.cost_table[s, last] for s in range(inst.n_services)))
    if total > inst.channel.budget_bytes:
        return AllocationResult(action=tuple(max(inst.factors) for _ in inst.services), reward=-1.0)

    weights = np.array([svc.weight for svc in inst.services])
    weight_sum = float(weights.sum())
    while True:
        best_ratio = 0.0
        best_service = None
        for s in range(inst.n_services):
            j = positions[s]
            if j == 0:
                continue
            extra = int(inst.cost_table[s, j - 1] - inst.cost_table[s, j])
            if total + extra > inst.channel.budget_bytes:
                continue
            gain = weights[s] * (table[s, j - 1] - table[s, j]) / weight_sum
            if gain <= 0.0:
                continue
            ratio = np.inf if extra == 0 else gain / extra
            if ratio > best_ratio:
                best_ratio = ratio
                best_service = s
        if best_service is None:
            break
        positions[best_service] -= 1
        total = int(sum(inst.cost_table[s, j] for s, j in enumerate(positions)))
    action = tuple(inst.factors[j] for j in positions)
    return AllocationResult(action=action, reward=_table_reward(inst, table, positions))


def random_allocate(
    inst: AllocationInstance, backend: GenerationBackend, rng: np.random.Generator
) -> AllocationResult:
    """Uniform random joint action, evaluated like any other."""
    index = int(rng.integers(inst.n_actions))
    action = decode_action(index, inst.factors, inst.n_services)
    return AllocationResult(action=action, reward=evaluate_action(inst, action, backend, rng).reward)


@dataclass(frozen=True)
class DqnConfig:
    hidden: tuple[int, ...] = (64, 64)
    buffer_capacity: int = 4096
    batch_size: int = 32
    learning_rate: float = 1e-3
    momentum: float = 0.9
    gamma: float = 0.0
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    epsilon_decay_fraction: float = 0.8
    target_sync: int = 50
    warmup: int = 64
    seed: int = 0


class DqnAgent:
    """Trained Q-network plus the action layout needed to decode its argmax."""

    def __init__(self, online: Mlp, target: Mlp, factors, n_services: int, config: DqnConfig):
        self.online = online
        self.target = target
        self.factors = tuple(factors)
        self.n_services = n_services
        self.config = config

    @property
    def state_dim(self) -> int:
        return self.online.sizes[0]

    @property
    def n_actions(self) -> int:
        return self.online.sizes[-1]


@dataclass(frozen=True, eq=False)
class TrainResult:
    agent: DqnAgent
    rewards: np.ndarray
    losses: np.ndarray
    epsilons: np.ndarray
    action_indices: np.ndarray
    instance_indices: np.ndarray


def epsilon_schedule(episodes: int, config: DqnConfig) -> np.ndarray:
    """Multiplicative decay from epsilon_start, reaching the floor after the decay fraction."""
    decay_episodes = max(1, round(config.epsilon_decay_fraction * episodes))
    ratio = (config.epsilon_min / config.epsilon_start) ** (1.0 / decay_episodes)
    eps = config.epsilon_start * ratio ** np.arange(episodes)
    return np.maximum(eps, config.epsilon_min)


class _ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int):
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.capacity = capacity
        self.size = 0
        self.cursor = 0

    def push(self, state, action, reward, next_state, done):
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.dones[idx],
        )


def dqn_train(
    pool,
    episodes: int,
    config: DqnConfig,
    backend: GenerationBackend,
) -> TrainResult:
    """Train a single-step DQN over a pool of allocation instances.

    Episodes are one joint decision: sample an instance, pick a joint
    action epsilon-greedily, collect the reward, store the transition as
    terminal, then take one gradient step on a uniform replay mini-batch
    once the warmup is filled.  Everything is driven by config.seed.
    """
    pool = list(pool)
    if not pool:
        raise DomainError("instance pool must be non-empty")
    first = pool[0]
    for inst in pool:
        if inst.factors != first.factors or inst.n_services != first.n_services:
            raise DomainError("all pool instances must share the factor set and service count")

    state_dim = 3 * first.n_services + 1
    n_actions = first.n_actions
    base = np.random.default_rng(config.seed)
    init_rng, instance_rng, explore_rng, replay_rng, eval_rng = base.spawn(5)

    online = Mlp([state_dim, *config.hidden, n_actions], init_rng)
    target = online.copy()
    optimizer = SgdMomentum(online, config.learning_rate, config.momentum)
    buffer = _ReplayBuffer(config.buffer_capacity, state_dim)
    epsilons = epsilon_schedule(episodes, config)

    rewards = np.zeros(episodes)
    losses = np.zeros(episodes)
    action_indices = np.zeros(episodes, dtype=np.int64)
    instance_indices = np.zeros(episodes, dtype=np.int64)
    weights = np.array([svc.weight for svc in first.services])
    weight_sum = float(weights.sum())
    grad_steps = 0

    for e in range(episodes):
        inst_idx = int(instance_rng.integers(len(pool)))
        inst = pool[inst_idx]
        state = inst.state_vector
        if float(explore_rng.random()) < epsilons[e]:
            a_idx = int(explore_rng.integers(n_actions))
        else:
            q, _ = online.forward(state)
            a_idx = int(np.argmax(q[0]))
        action = decode_action(a_idx, inst.factors, inst.n_services)
        evaluation = evaluate_action(inst, action, backend, eval_rng)
        buffer.push(state, a_idx, evaluation.reward, state, 1.0)

        if buffer.size >= config.warmup:
            s_b, a_b, r_b, ns_b, done_b = buffer.sample(config.batch_size, replay_rng)
            if config.gamma > 0.0:
                q_next, _ = target.forward(ns_b)
                bootstrap = config.gamma * q_next.max(axis=1) * (1.0 - done_b)
            else:
                bootstrap = 0.0
            targets = r_b + bootstrap
            loss_value, d_w, d_b = td_loss_and_gradients(online, s_b, a_b, targets)
            optimizer.step(online, d_w, d_b)
            grad_steps += 1
            if grad_steps % config.target_sync == 0:
                target = online.copy()

        rewards[e] = evaluation.reward
        qualities = np.array([rep.quality for rep in evaluation.reports])
        losses[e] = float(np.sum(weights * (1.0 - qualities)) / weight_sum)
        action_indices[e] = a_idx
        instance_indices[e] = inst_idx

    agent = DqnAgent(online, target, first.factors, first.n_services, config)
    return TrainResult(
        agent=agent,
        rewards=rewards,
        losses=losses,
        epsilons=epsilons,
        action_indices=action_indices,
        instance_indices=instance_indices,
    )


def dqn_act(agent: DqnAgent, state: np.ndarray) -> tuple[int, ...]:
    """Greedy action of the trained agent; ties resolve to the smallest index."""
    state = np.asarray(state, dtype=np.float64)
    if state.ndim != 1 or state.size != agent.state_dim:
        raise ShapeError(f"state has shape {state.shape}, agent expects ({agent.state_dim},)")
    q, _ = agent.online.forward(state)
    return decode_action(int(np.argmax(q[0])), agent.factors, agent.n_services)
