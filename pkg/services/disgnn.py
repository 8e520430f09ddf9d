# services/disgnn.py
"""
연속 k-DisGNN / k-F-DisGNN / k-E-DisGNN (+ 노드 단위 vanilla) 순전파.
학습은 하지 않으며 가중치는 seed 로 완전히 결정된다.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from core import config
from core.errors import ConfigurationError
from services.geometry import PointCloud, center_coordinates, distance_matrix
from utils.tuples import (
    diagonal_mask,
    edge_along,
    equality_pattern_codes,
    position_pairs,
    replace_position,
)

logger = logging.getLogger(__name__)

VARIANTS = ("plain", "f", "e", "vanilla")
ACTIVATIONS = ("silu", "tanh")

# 이산 엔진의 대응 방법
DISCRETE_ANALOG = {"plain": "kwl", "f": "kfwl", "e": "kewl", "vanilla": "wl1e"}

# 가중치 스트림 ID (variant 와 무관한 블록은 고정 ID 라 T=0 출력이 variant 간에 같다)
_STREAM_LABEL_EMBED = 1
_STREAM_LABEL_MAPS = 2
_STREAM_DISTANCE_MAPS = 3
_STREAM_PATTERN = 4
_STREAM_READOUT = 5
_STREAM_NODE = 6
_STREAM_HEAD = 7
_STREAM_ROUND = 100

# 표준화 분모의 하한 (튜플 간에 상수인 특징은 1 로 남는다)
_NORM_EPS = 1e-6


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "plain"
    k: int = 2
    rounds: int = 1
    hidden_dim: int = config.HIDDEN_DIM
    rbf_dim: int = config.RBF_DIM
    label_dim: int = config.LABEL_DIM
    seed: int = 0
    activation: str = "silu"
    beta: float = config.RBF_BETA
    fast_path: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r} (choose from {', '.join(VARIANTS)})")
        if self.variant != "vanilla" and self.k < 2:
            raise ConfigurationError(f"variant {self.variant!r} needs k >= 2")
        if self.rounds < 0:
            raise ConfigurationError("rounds must be >= 0")
        if min(self.hidden_dim, self.rbf_dim, self.label_dim) < 1:
            raise ConfigurationError("all dimensions must be >= 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive")

    @property
    def order(self) -> int:
        return 1 if self.variant == "vanilla" else self.k


@dataclass(frozen=True, eq=False)
class RbfParams:
    betas: np.ndarray
    mus: np.ndarray

    @classmethod
    def default(cls, rbf_dim: int, beta: float = config.RBF_BETA) -> "RbfParams":
        """β 는 공통 상수, μ 는 (0, 1] 에 등간격"""
        return cls(betas=np.full(rbf_dim, float(beta)), mus=np.linspace(0.0, 1.0, rbf_dim + 1)[1:])


def rbf_expand(d, p: RbfParams) -> np.ndarray:
    """f[k] = exp(-β_k (exp(-d) - μ_k)^2), 마지막 축에 H_e 성분"""
    d = np.asarray(d, dtype=np.float64)
    return np.exp(-p.betas * (np.exp(-d)[..., None] - p.mus) ** 2)


def _silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


_ACT: Dict[str, Callable[[np.ndarray], np.ndarray]] = {"silu": _silu, "tanh": np.tanh}


@dataclass(frozen=True, eq=False)
class Block:
    """두 층 affine + 비선형: act(x W1 + b1) W2 + b2"""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: str

    def act(self, x: np.ndarray) -> np.ndarray:
        return _ACT[self.activation](x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.act(x @ self.w1 + self.b1) @ self.w2 + self.b2


def _block(rng: np.random.Generator, fan_in: int, width: int, fan_out: int, activation: str) -> Block:
    a1, a2 = fan_in ** -0.5, width ** -0.5
    arrays = [
        rng.uniform(-a1, a1, size=(fan_in, width)),
        rng.uniform(-a1, a1, size=width),
        rng.uniform(-a2, a2, size=(width, fan_out)),
        rng.uniform(-a2, a2, size=fan_out),
    ]
    for arr in arrays:
        arr.flags.writeable = False
    return Block(*arrays, activation=activation)


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


@dataclass(frozen=True, eq=False)
class RoundWeights:
    phi: Tuple[Block, ...]  # 메시지 맵 (plain/e: 위치마다 하나, f/vanilla: 하나)
    update: Block
    edge: Optional[Block] = None  # f_e^t (e, vanilla)
    pool: Tuple[Block, ...] = ()  # k > 2 e-variant 의 위치쌍별 풀링 맵


@dataclass(frozen=True, eq=False)
class WeightSet:
    rbf: RbfParams
    label_embedding: np.ndarray
    label_maps: Tuple[Block, ...]
    distance_maps: Dict[Tuple[int, int], Block]
    pattern_table: np.ndarray
    rounds: Tuple[RoundWeights, ...]
    readout_diag: Block
    readout_off: Block
    readout_out: Block
    node_pre: Block
    node_out: Block
    head: Block


@dataclass(frozen=True, eq=False)
class ModelOutput:
    variant: str
    tuple_reps: np.ndarray  # (n,)*k + (K,)
    scalar: float
    node_reps: np.ndarray  # (n, K)
    equivariant: np.ndarray  # (3,)


def _round_weights(cfg: ModelConfig, t: int) -> RoundWeights:
    K, act, k = cfg.hidden_dim, cfg.activation, cfg.order
    rng = _rng(cfg.seed, _STREAM_ROUND + t, VARIANTS.index(cfg.variant))
    if cfg.variant == "plain":
        phi = tuple(_block(rng, K, K, K, act) for _ in range(k))
        return RoundWeights(phi=phi, update=_block(rng, (k + 1) * K, K, K, act))
    if cfg.variant == "f":
        return RoundWeights(phi=(_block(rng, k * K, K, K, act),), update=_block(rng, 2 * K, K, K, act))
    if cfg.variant == "e":
        pairs = position_pairs(k)
        pool = tuple(_block(rng, K, K, K, act) for _ in pairs) if k > 2 else ()
        edge = _block(rng, cfg.rbf_dim + len(pairs) * K, K, K, act)
        phi = tuple(_block(rng, 2 * K, K, K, act) for _ in range(k))
        return RoundWeights(phi=phi, update=_block(rng, (k + 1) * K, K, K, act), edge=edge, pool=pool)
    # vanilla
    edge = _block(rng, cfg.rbf_dim, K, K, act)
    return RoundWeights(phi=(_block(rng, K, K, K, act),), update=_block(rng, 2 * K, K, K, act), edge=edge)


@lru_cache(maxsize=64)
def build_weights(cfg: ModelConfig) -> WeightSet:
    """seed 별 명명 스트림에서 모든 블록 생성"""
    K, Hz, He, act, k = cfg.hidden_dim, cfg.label_dim, cfg.rbf_dim, cfg.activation, cfg.order

    embedding = _rng(cfg.seed, _STREAM_LABEL_EMBED).normal(size=(config.LABEL_VOCAB, Hz))
    embedding.flags.writeable = False
    rng = _rng(cfg.seed, _STREAM_LABEL_MAPS)
    label_maps = tuple(_block(rng, Hz, K, K, act) for _ in range(k))
    rng = _rng(cfg.seed, _STREAM_DISTANCE_MAPS)
    distance_maps = {pair: _block(rng, He, K, K, act) for pair in position_pairs(k)}

    num_codes = 2 ** len(position_pairs(k))
    pattern = 1.0 + _rng(cfg.seed, _STREAM_PATTERN).uniform(-0.5, 0.5, size=(num_codes, K))
    pattern.flags.writeable = False

    rng = _rng(cfg.seed, _STREAM_READOUT)
    readout = (_block(rng, K, K, K, act), _block(rng, K, K, K, act), _block(rng, 2 * K, K, 1, act))
    rng = _rng(cfg.seed, _STREAM_NODE)
    node = (_block(rng, K, K, K, act), _block(rng, K, K, K, act))
    head = _block(_rng(cfg.seed, _STREAM_HEAD), K, K, 1, act)

    return WeightSet(
        rbf=RbfParams.default(He, cfg.beta),
        label_embedding=embedding,
        label_maps=label_maps,
        distance_maps=distance_maps,
        pattern_table=pattern,
        rounds=tuple(_round_weights(cfg, t) for t in range(cfg.rounds)),
        readout_diag=readout[0],
        readout_off=readout[1],
        readout_out=readout[2],
        node_pre=node[0],
        node_out=node[1],
        head=head,
    )


def _map_positions(fn, k: int, threads: int) -> List[np.ndarray]:
    if threads > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=min(threads, k)) as pool:
            return list(pool.map(fn, range(k)))
    return [fn(j) for j in range(k)]


def _axis_shape(n: int, k: int, K: int, axes: Tuple[int, ...]) -> List[int]:
    shape = [1] * k + [K]
    for a in axes:
        shape[a] = n
    return shape


# --- 초기화 ---

def standardize(reps: np.ndarray) -> np.ndarray:
    """특징마다 점군의 모든 튜플(노드)에 걸쳐 평균 0, 분산 1 로 맞춘 뒤 1 을 더한다"""
    axes = tuple(range(reps.ndim - 1))
    centered = reps - reps.mean(axis=axes)
    return 1.0 + centered / np.sqrt((centered ** 2).mean(axis=axes) + _NORM_EPS)


def init_reps(pc: PointCloud, cfg: ModelConfig, weights: WeightSet) -> np.ndarray:
    """
    h_v^0 = ⊙_a (1 + f_z^a(emb(z_{v_a}))) ⊙ ⊙_{a<b} (1 + f_e^{ab}(rbf(d_{v_a v_b}))) ⊙ pattern(v)
    vanilla: h_i^0 = f_z(emb(z_i))
    마지막에 standardize 를 거친다.
    """
    labels = np.asarray(pc.labels, dtype=np.int64)
    if labels.size and labels.max() >= config.LABEL_VOCAB:
        raise ConfigurationError(f"labels must be < {config.LABEL_VOCAB} for the continuous model")
    emb = weights.label_embedding[labels]
    n, k, K = pc.n, cfg.order, cfg.hidden_dim
    if k == 1:
        return standardize(weights.label_maps[0](emb))

    rbf = rbf_expand(distance_matrix(pc), weights.rbf)
    h = np.ones((n,) * k + (K,))
    for a in range(k):
        h = h * (1.0 + weights.label_maps[a](emb)).reshape(_axis_shape(n, k, K, (a,)))
    for (a, b), block in weights.distance_maps.items():
        h = h * (1.0 + block(rbf)).reshape(_axis_shape(n, k, K, (a, b)))
    codes = equality_pattern_codes(n, k).reshape((n,) * k)
    return standardize(h * weights.pattern_table[codes])


# --- 메시지 전달 (모두 잔차: h + f(...)) ---

def step_plain(tuple_reps: np.ndarray, pc: PointCloud, weights: WeightSet, t: int, threads: int = 1) -> np.ndarray:
    """h_v ← f(h_v, (Σ_{w∈N_j(v)} φ_j(h_w) | j))"""
    H = tuple_reps
    k, n = H.ndim - 1, H.shape[0]
    rw = weights.rounds[t]

    def message(j):
        return np.broadcast_to(rw.phi[j](H).sum(axis=j, keepdims=True), H.shape) / n

    return H + rw.update(np.concatenate([H] + _map_positions(message, k, threads), axis=-1))


def step_f(tuple_reps: np.ndarray, pc: PointCloud, weights: WeightSet, t: int, threads: int = 1,
           fast: bool = True) -> np.ndarray:
    """h_v ← f(h_v, Σ_w φ(h_{v[0←w]}, ..., h_{v[k-1←w]}))"""
    H = tuple_reps
    k, n, K = H.ndim - 1, H.shape[0], H.shape[-1]
    rw = weights.rounds[t]
    phi = rw.phi[0]

    if fast:
        # 첫 층이 선형이므로 순서 벡터를 이어붙이기 전에 위치별로 곱해 둔다
        parts = _map_positions(lambda j: replace_position(H @ phi.w1[j * K:(j + 1) * K], j, k), k, threads)
        pre = parts[0]
        for part in parts[1:]:
            pre = pre + part
        hidden = phi.act(pre + phi.b1).sum(axis=k)
        msg = (hidden @ phi.w2 + n * phi.b2) / n
    else:
        stacked = np.concatenate([replace_position(H, j, k) for j in range(k)], axis=-1)
        msg = phi(stacked).sum(axis=k) / n

    return H + rw.update(np.concatenate([H, msg], axis=-1))


def edge_states(tuple_reps: np.ndarray, pc: PointCloud, weights: WeightSet, t: int) -> np.ndarray:
    """e_ij = f_e(rbf(d_ij), (Σ_{w_u=i, w_v=j} g_uv(h_w) | u<v)); k=2 이면 f_e(rbf(d_ij), h_ij)"""
    H = tuple_reps
    k, n, K = H.ndim - 1, H.shape[0], H.shape[-1]
    rw = weights.rounds[t]
    rbf = rbf_expand(distance_matrix(pc), weights.rbf)
    if k == 2:
        pooled = [H]
    else:
        pooled = []
        for block, (u, v) in zip(rw.pool, position_pairs(k)):
            moved = np.moveaxis(block(H), (u, v), (0, 1))
            pooled.append(moved.reshape(n, n, -1, K).sum(axis=2) / n ** (k - 2))
    return rw.edge(np.concatenate([rbf] + pooled, axis=-1))


def step_e(tuple_reps: np.ndarray, pc: PointCloud, weights: WeightSet, t: int, threads: int = 1,
           edges: Optional[np.ndarray] = None) -> np.ndarray:
    """h_v ← f(h_v, (Σ_{w∈N_j(v)} φ_j(h_w, e_{v_j, w_j}) | j))"""
    H = tuple_reps
    k, n, K = H.ndim - 1, H.shape[0], H.shape[-1]
    rw = weights.rounds[t]
    E = edge_states(H, pc, weights, t) if edges is None else edges

    def message(j):
        phi = rw.phi[j]
        pre = replace_position(H @ phi.w1[:K], j, k) + edge_along(E @ phi.w1[K:], j, k)
        return (phi.act(pre + phi.b1).sum(axis=k) @ phi.w2 + n * phi.b2) / n

    return H + rw.update(np.concatenate([H] + _map_positions(message, k, threads), axis=-1))


def step_vanilla(node_reps: np.ndarray, pc: PointCloud, weights: WeightSet, t: int, threads: int = 1) -> np.ndarray:
    """h_i ← f(h_i, Σ_{j≠i} φ(h_j ⊙ f_e(rbf(d_ij))))"""
    H = node_reps
    n = H.shape[0]
    rw = weights.rounds[t]
    gate = rw.edge(rbf_expand(distance_matrix(pc), weights.rbf))
    messages = rw.phi[0](H[None, :, :] * gate)
    messages = messages * (~np.eye(n, dtype=bool))[:, :, None]
    return H + rw.update(np.concatenate([H, messages.sum(axis=1) / n], axis=-1))


# --- 출력 ---

def readout_scalar(tuple_reps: np.ndarray, weights: WeightSet) -> float:
    """대각 튜플과 나머지를 따로 풀링한 뒤 f_out"""
    H = tuple_reps
    k, n, K = H.ndim - 1, H.shape[0], H.shape[-1]
    flat = H.reshape(-1, K)
    diag = diagonal_mask(n, k)
    pooled = np.concatenate([
        weights.readout_diag(flat[diag]).sum(axis=0),
        weights.readout_off(flat[~diag]).sum(axis=0),
    ])
    return float(weights.readout_out(pooled)[0])


def node_reps(tuple_reps: np.ndarray, weights: WeightSet) -> np.ndarray:
    """h_m = f_node(Σ_{v_0 = m} ψ(h_v))"""
    H = tuple_reps
    k = H.ndim - 1
    pooled = weights.node_pre(H)
    if k > 1:
        pooled = pooled.sum(axis=tuple(range(1, k)))
    return weights.node_out(pooled)


def equivariant_head(pc: PointCloud, node_reps: np.ndarray, weights: WeightSet) -> np.ndarray:
    """Σ_m MLP(h_m) · x_m^c"""
    centered = center_coordinates(pc).coords
    return weights.head(node_reps)[:, 0] @ centered


_STEPS = {"plain": step_plain, "e": step_e, "vanilla": step_vanilla}


def forward(pc: PointCloud, cfg: ModelConfig, threads: int = 1) -> ModelOutput:
    weights = build_weights(cfg)
    H = init_reps(pc, cfg, weights)
    for t in range(cfg.rounds):
        if cfg.variant == "f":
            H = step_f(H, pc, weights, t, threads, fast=cfg.fast_path)
        else:
            H = _STEPS[cfg.variant](H, pc, weights, t, threads)
        logger.debug(f"{cfg.variant} round {t + 1}/{cfg.rounds}: 튜플 간 표준편차 {float(H.std(axis=tuple(range(H.ndim - 1))).mean()):.3g}")
        H = standardize(H)

    nodes = node_reps(H, weights)
    return ModelOutput(
        variant=cfg.variant,
        tuple_reps=H,
        scalar=readout_scalar(H, weights),
        node_reps=nodes,
        equivariant=equivariant_head(pc, nodes, weights),
    )
