# services/wl_engine.py
"""
거리 그래프 위의 색 정제 엔진: 1-WL, 1-WL-E, k-WL, k-FWL, k-E-WL

모든 그래프의 시그니처 행을 라운드마다 한꺼번에 np.unique 로 intern 하므로
같은 시그니처는 (그래프가 달라도) 같은 색 ID 를 받는다.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from core import config
from core.errors import ConfigurationError, MemoryGuardError
from services.geometry import PointCloud, QuantizedDistanceMatrix, canonicalize_distances, distance_matrix
from utils.tuples import edge_along, position_pairs, replace_position, tuple_indices

logger = logging.getLogger(__name__)

METHODS = ("wl1", "wl1e", "kwl", "kfwl", "kewl")
TUPLE_METHODS = ("kwl", "kfwl", "kewl")
UNTIL_STABLE = "until-stable"


@dataclass(frozen=True)
class RefinementConfig:
    method: str
    k: int = 2
    rounds: Union[int, str] = UNTIL_STABLE
    tau: float = config.DEFAULT_TAU
    max_tuples: int = config.MAX_TUPLES
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r} (choose from {', '.join(METHODS)})")
        if self.method in TUPLE_METHODS and self.k < 2:
            raise ConfigurationError(f"{self.method} needs k >= 2, got k={self.k}")
        if self.rounds != UNTIL_STABLE and (not isinstance(self.rounds, int) or self.rounds < 0):
            raise ConfigurationError(f"rounds must be a non-negative integer or {UNTIL_STABLE!r}")
        if self.tau <= 0:
            raise ConfigurationError("tau must be positive")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")

    @property
    def order(self) -> int:
        """색을 붙이는 튜플의 길이 (wl1/wl1e 는 k 를 무시하고 1)"""
        return self.k if self.method in TUPLE_METHODS else 1

    @property
    def label(self) -> str:
        if self.method in TUPLE_METHODS:
            return f"{self.k}-{self.method}"
        return self.method


@dataclass(frozen=True, eq=False)
class DistanceGraph:
    """정제 엔진의 입력: 양자화된 거리 클래스 행렬 + 노드 라벨"""
    classes: np.ndarray
    labels: tuple

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class ColorTable:
    colors: np.ndarray  # C 순서로 펼친 튜플 색, 길이 n^order
    round: int
    n: int
    order: int

    def as_tensor(self) -> np.ndarray:
        return self.colors.reshape((self.n,) * self.order)

    def color_of(self, tup: Sequence[int]) -> int:
        return int(self.as_tensor()[tuple(tup)])


@dataclass(frozen=True, eq=False)
class RefinementResult:
    method: str
    k: int
    per_round_histograms: List[Dict[int, int]]
    stable_round: Optional[int]  # 예산 안에서 안정화되지 않았으면 None
    final: ColorTable
    node_colors: tuple
    round_timings_ms: List[float] = field(default_factory=list)
    per_round_class_counts: List[int] = field(default_factory=list)

    @property
    def rounds_run(self) -> int:
        return len(self.per_round_histograms) - 1

    @property
    def kinds(self) -> tuple:
        """노드 색 클래스 크기 (내림차순)"""
        _, counts = np.unique(np.asarray(self.node_colors), return_counts=True)
        return tuple(sorted((int(c) for c in counts), reverse=True))

    def node_partition(self) -> List[List[int]]:
        groups: Dict[int, List[int]] = {}
        for node, color in enumerate(self.node_colors):
            groups.setdefault(color, []).append(node)
        return [groups[c] for c in sorted(groups)]


@dataclass(frozen=True)
class Verdict:
    distinguished: bool
    separation_round: Optional[int]
    method: str
    k: int
    rounds_run: int


# --- 그래프 준비 ---

def distance_graphs(clouds: Sequence[PointCloud], tau: float = config.DEFAULT_TAU,
                    labels: Optional[Sequence[Sequence[int]]] = None) -> List[DistanceGraph]:
    """여러 점군을 함께 양자화 (labels 로 초기 라벨을 덮어쓸 수 있음)"""
    qs = canonicalize_distances([distance_matrix(pc) for pc in clouds], tau)
    out = []
    for idx, (pc, q) in enumerate(zip(clouds, qs)):
        node_labels = pc.labels if labels is None else tuple(int(z) for z in labels[idx])
        out.append(DistanceGraph(classes=q.classes, labels=node_labels))
    return out


def _graph_from(q: QuantizedDistanceMatrix, labels: Sequence[int]) -> DistanceGraph:
    return DistanceGraph(classes=np.asarray(q.classes), labels=tuple(int(z) for z in labels))


# --- intern (공유 HASH 사전) ---

def _intern(blocks: Sequence[np.ndarray]) -> List[np.ndarray]:
    """
    그래프별 시그니처 행 블록을 합쳐 정렬된 고유 행 순서로 dense ID 부여.
    ID 는 입력 순서나 스레드 수와 무관하게 결정된다.
    """
    sizes = [b.shape[0] for b in blocks]
    stacked = np.concatenate([b.reshape(b.shape[0], -1) for b in blocks], axis=0)
    if stacked.shape[1] == 0:
        ids = np.zeros(stacked.shape[0], dtype=np.int64)
    else:
        _, inverse = np.unique(stacked, axis=0, return_inverse=True)
        ids = inverse.reshape(-1).astype(np.int64)
    return np.split(ids, np.cumsum(sizes)[:-1])


def _histogram(colors: np.ndarray) -> Dict[int, int]:
    values, counts = np.unique(colors, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def _map_positions(fn: Callable[[int], np.ndarray], k: int, threads: int) -> List[np.ndarray]:
    if threads > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=min(threads, k)) as pool:
            return list(pool.map(fn, range(k)))
    return [fn(j) for j in range(k)]


# --- 초기 색 ---

def _initial_rows(graph: DistanceGraph, order: int) -> np.ndarray:
    labels = np.asarray(graph.labels, dtype=np.int64)
    if order == 1:
        return labels.reshape(-1, 1)
    idx = tuple_indices(graph.n, order)
    cols = [labels[idx[a]] for a in range(order)]
    cols += [graph.classes[idx[a], idx[b]] for a in range(order) for b in range(order)]
    return np.stack(cols, axis=1)


def init_tuple_colors(q: QuantizedDistanceMatrix, labels: Sequence[int], k: int) -> ColorTable:
    """
    순서 있는 k×k 거리 클래스 행렬 + 순서 있는 라벨이 같으면 같은 색.
    (동일성 패턴은 대각 0-클래스로 자동 구분)
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    graph = _graph_from(q, labels)
    (colors,) = _intern([_initial_rows(graph, k)])
    return ColorTable(colors=colors, round=0, n=graph.n, order=k)


# --- 라운드별 시그니처 ---

def _off_diagonal(matrix: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    return matrix[~np.eye(n, dtype=bool)].reshape(n, n - 1)


def _step_wl1(graphs, colors, config, num_edge_classes):
    rows = []
    for c in colors:
        neigh = np.sort(_off_diagonal(np.broadcast_to(c[None, :], (c.size, c.size))), axis=1)
        rows.append(np.concatenate([c[:, None], neigh], axis=1))
    return _intern(rows)


def _step_wl1e(graphs, colors, config, num_edge_classes):
    rows = []
    for g, c in zip(graphs, colors):
        pairs = c[None, :] * num_edge_classes + g.classes
        neigh = np.sort(_off_diagonal(pairs), axis=1)
        rows.append(np.concatenate([c[:, None], neigh], axis=1))
    return _intern(rows)


def _combine(colors, per_position: List[List[np.ndarray]]):
    """[이전 색, 위치별 multiset ID...] 행을 다시 intern"""
    rows = []
    for g_idx, c in enumerate(colors):
        cols = [c] + [ids[g_idx] for ids in per_position]
        rows.append(np.stack(cols, axis=1))
    return _intern(rows)


def _step_kwl(graphs, colors, config, num_edge_classes):
    k, n = config.k, graphs[0].n

    def position(j):
        blocks = []
        for c in colors:
            replaced = replace_position(c.reshape((n,) * k), j, k).reshape(n ** k, n)
            blocks.append(np.sort(replaced, axis=1))
        return _intern(blocks)

    return _combine(colors, _map_positions(position, k, config.threads))


def _step_kfwl(graphs, colors, config, num_edge_classes):
    k, n = config.k, graphs[0].n
    vectors = []
    for c in colors:
        tensor = c.reshape((n,) * k)
        stacked = np.stack([replace_position(tensor, j, k) for j in range(k)], axis=-1)
        vectors.append(stacked.reshape(n ** (k + 1), k))
    vector_ids = _intern(vectors)
    rows = []
    for c, ids in zip(colors, vector_ids):
        multiset = np.sort(ids.reshape(n ** k, n), axis=1)
        rows.append(np.concatenate([c[:, None], multiset], axis=1))
    return _intern(rows)


def _edge_colors(graphs, colors, k: int) -> List[np.ndarray]:
    """e_ij = HASH(거리 클래스, (w_u=i, w_v=j 인 튜플 색의 multiset | u<v))"""
    n = graphs[0].n
    rows = []
    for g, c in zip(graphs, colors):
        tensor = c.reshape((n,) * k)
        cols = [g.classes.reshape(n * n, 1)]
        for u, v in position_pairs(k):
            pooled = np.moveaxis(tensor, (u, v), (0, 1)).reshape(n * n, -1)
            cols.append(np.sort(pooled, axis=1))
        rows.append(np.concatenate(cols, axis=1))
    return [e.reshape(n, n) for e in _intern(rows)]


def _step_kewl(graphs, colors, config, num_edge_classes):
    k, n = config.k, graphs[0].n
    edges = _edge_colors(graphs, colors, k)
    edge_width = max(int(e.max()) for e in edges) + 1

    def position(j):
        blocks = []
        for c, e in zip(colors, edges):
            replaced = replace_position(c.reshape((n,) * k), j, k)
            pairs = replaced * edge_width + edge_along(e, j, k)
            blocks.append(np.sort(pairs.reshape(n ** k, n), axis=1))
        return _intern(blocks)

    return _combine(colors, _map_positions(position, k, config.threads))


_STEPS = {
    "wl1": _step_wl1,
    "wl1e": _step_wl1e,
    "kwl": _step_kwl,
    "kfwl": _step_kfwl,
    "kewl": _step_kewl,
}


# --- 공동 정제 ---

def _pool_node_colors(colors: List[np.ndarray], n: int, order: int) -> List[np.ndarray]:
    """v_0 = m 인 튜플 색 multiset 으로 노드 색 결정"""
    if order == 1:
        return colors
    return _intern([np.sort(c.reshape(n, n ** (order - 1)), axis=1) for c in colors])


def _check_memory(n: int, cfg: RefinementConfig):
    if cfg.order > 1 and n ** cfg.order > cfg.max_tuples:
        raise MemoryGuardError(n, cfg.order, cfg.max_tuples)


def refine_joint(graphs: Sequence[DistanceGraph], cfg: RefinementConfig,
                 stop_on_separation: bool = False) -> List[RefinementResult]:
    """
    같은 크기의 그래프들을 공유 HASH 사전으로 함께 정제.
    전체(모든 그래프 합친) 분할이 더 이상 세분되지 않으면 안정 상태.
    """
    if not graphs:
        return []
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ConfigurationError("joint refinement needs graphs of equal size")
    _check_memory(n, cfg)

    order = cfg.order
    num_edge_classes = max(int(g.classes.max()) for g in graphs) + 1
    step = _STEPS[cfg.method]
    cap = n ** order + 1
    budget = cap if cfg.rounds == UNTIL_STABLE else min(int(cfg.rounds), cap)

    started = time.perf_counter()
    colors = _intern([_initial_rows(g, order) for g in graphs])
    timings = [(time.perf_counter() - started) * 1000.0]
    histograms = [[_histogram(c)] for c in colors]
    class_counts = [[len(h[0])] for h in histograms]
    joint_classes = int(max(int(c.max()) for c in colors)) + 1
    stable_round = None
    separated = len({tuple(sorted(h[0].items())) for h in histograms}) > 1

    for t in range(1, budget + 1):
        if stop_on_separation and separated:
            break
        started = time.perf_counter()
        colors = step(graphs, colors, cfg, num_edge_classes)
        timings.append((time.perf_counter() - started) * 1000.0)
        for g_idx, c in enumerate(colors):
            h = _histogram(c)
            histograms[g_idx].append(h)
            class_counts[g_idx].append(len(h))
        new_joint = int(max(int(c.max()) for c in colors)) + 1
        logger.debug(f"{cfg.label} round {t}: {joint_classes} → {new_joint} joint classes ({timings[-1]:.1f} ms)")
        separated = separated or len({tuple(sorted(h[-1].items())) for h in histograms}) > 1
        if new_joint == joint_classes:
            stable_round = t - 1
            break
        joint_classes = new_joint

    node_colors = _pool_node_colors(colors, n, order)
    final_round = len(histograms[0]) - 1
    return [
        RefinementResult(
            method=cfg.method,
            k=order,
            per_round_histograms=histograms[g_idx],
            stable_round=stable_round,
            final=ColorTable(colors=colors[g_idx], round=final_round, n=n, order=order),
            node_colors=tuple(int(x) for x in node_colors[g_idx]),
            round_timings_ms=timings,
            per_round_class_counts=class_counts[g_idx],
        )
        for g_idx in range(len(graphs))
    ]


def _refine_single(graph: Union[DistanceGraph, PointCloud], cfg: RefinementConfig, method: str) -> RefinementResult:
    if cfg.method != method:
        raise ConfigurationError(f"config method {cfg.method!r} does not match {method!r}")
    if isinstance(graph, PointCloud):
        (graph,) = distance_graphs([graph], cfg.tau)
    return refine_joint([graph], cfg)[0]


def refine_wl1(graph, cfg: RefinementConfig) -> RefinementResult:
    return _refine_single(graph, cfg, "wl1")


def refine_wl1e(graph, cfg: RefinementConfig) -> RefinementResult:
    return _refine_single(graph, cfg, "wl1e")


def refine_kwl(graph, cfg: RefinementConfig) -> RefinementResult:
    return _refine_single(graph, cfg, "kwl")


def refine_kfwl(graph, cfg: RefinementConfig) -> RefinementResult:
    return _refine_single(graph, cfg, "kfwl")


def refine_kewl(graph, cfg: RefinementConfig) -> RefinementResult:
    return _refine_single(graph, cfg, "kewl")


def refine(graph, cfg: RefinementConfig) -> RefinementResult:
    """cfg.method 에 맞는 정제 실행"""
    return _refine_single(graph, cfg, cfg.method)


def first_separation(results: Sequence[RefinementResult]) -> Optional[int]:
    rounds = min(len(r.per_round_histograms) for r in results)
    for t in range(rounds):
        if any(r.per_round_histograms[t] != results[0].per_round_histograms[t] for r in results[1:]):
            return t
    return None


def distinguish(a: PointCloud, b: PointCloud, cfg: RefinementConfig) -> Verdict:
    """공동 양자화 + 공유 HASH 로 두 점군의 히스토그램 비교"""
    if a.n != b.n:
        logger.debug(f"node counts differ ({a.n} vs {b.n}); distinguished at round 0")
        return Verdict(distinguished=True, separation_round=0, method=cfg.method, k=cfg.order, rounds_run=0)

    graphs = distance_graphs([a, b], cfg.tau)
    results = refine_joint(graphs, cfg, stop_on_separation=True)
    separation = first_separation(results)
    return Verdict(
        distinguished=separation is not None,
        separation_round=separation,
        method=cfg.method,
        k=cfg.order,
        rounds_run=results[0].rounds_run,
    )
