# services/geometry.py
"""
점군(PointCloud) 표현, E(3) 작용, 거리 추출/공동 양자화, 합동 판정 오라클
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.spatial.transform import Rotation

from core import config
from core.errors import InvalidPointCloudError, InvalidTransformError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointCloud:
    coords: np.ndarray  # (n, 3), read-only
    labels: tuple

    @property
    def n(self) -> int:
        return len(self.labels)

    def permuted(self, perm: Sequence[int]) -> "PointCloud":
        """새 노드 i = 기존 노드 perm[i]"""
        perm = list(perm)
        return build_point_cloud(self.coords[perm], [self.labels[p] for p in perm])


@dataclass(frozen=True, eq=False)
class E3Transform:
    rotation: np.ndarray  # (3, 3) 직교행렬 (det = ±1)
    translation: np.ndarray  # (3,)

    @property
    def is_reflection(self) -> bool:
        return bool(np.linalg.det(self.rotation) < 0)


@dataclass(frozen=True, eq=False)
class QuantizedDistanceMatrix:
    classes: np.ndarray  # (n, n) int64, 공동 클래스 ID
    representative: tuple  # class id → 대표 거리
    source_n: int

    @property
    def num_classes(self) -> int:
        return len(self.representative)


@dataclass(frozen=True)
class CongruenceVerdict:
    congruent: bool
    witness_permutation: Optional[tuple]
    max_residual: float


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def build_point_cloud(coords, labels: Optional[Sequence[int]] = None) -> PointCloud:
    """좌표/라벨 검증 후 PointCloud 생성 (라벨 기본값 0)"""
    arr = np.array(coords, dtype=np.float64)
    if arr.size == 0:
        raise InvalidPointCloudError("point cloud must contain at least one point")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidPointCloudError(f"coords must be a list of 3-vectors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0][0])
        raise InvalidPointCloudError(f"non-finite coordinate at point {bad}")

    n = arr.shape[0]
    if labels is None:
        label_tuple = (0,) * n
    else:
        label_tuple = tuple(int(z) for z in labels)
        if len(label_tuple) != n:
            raise InvalidPointCloudError(f"{len(label_tuple)} labels given for {n} points")
        if any(z < 0 for z in label_tuple):
            raise InvalidPointCloudError("labels must be non-negative integers")
    return PointCloud(coords=_frozen(arr), labels=label_tuple)


def distance_matrix(pc: PointCloud) -> np.ndarray:
    d = cdist(pc.coords, pc.coords)
    np.fill_diagonal(d, 0.0)
    return d


def canonicalize_distances(matrices: Sequence[np.ndarray], tau: float = config.DEFAULT_TAU) -> List[QuantizedDistanceMatrix]:
    """
    모든 행렬의 거리값을 함께 정렬한 뒤, 인접 값의 차이가 tau 이하이면 같은 클래스로 병합.
    클래스 ID 는 모든 출력에서 공유된다 (그래프 간 HASH 비교용).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not matrices:
        return []

    flat = np.concatenate([np.asarray(m, dtype=np.float64).ravel() for m in matrices])
    order = np.argsort(flat, kind="stable")
    ordered = flat[order]
    breaks = np.diff(ordered) > tau
    sorted_ids = np.concatenate([[0], np.cumsum(breaks)]).astype(np.int64)
    ids = np.empty_like(sorted_ids)
    ids[order] = sorted_ids

    num_classes = int(sorted_ids[-1]) + 1
    counts = np.bincount(sorted_ids, minlength=num_classes)
    means = np.bincount(sorted_ids, weights=ordered, minlength=num_classes) / counts
    lows = ordered[np.concatenate([[0], np.flatnonzero(breaks) + 1])]
    highs = ordered[np.concatenate([np.flatnonzero(breaks), [len(ordered) - 1]])]
    if np.any(highs - lows > tau):
        logger.warning(
            f"⚠️ 거리 클래스 {int(np.sum(highs - lows > tau))}개가 tau={tau:g} 보다 넓게 연결됨 (chain merge)"
        )
    representative = tuple(float(x) for x in means)

    out = []
    offset = 0
    for m in matrices:
        size = np.asarray(m).size
        n = np.asarray(m).shape[0]
        classes = ids[offset:offset + size].reshape(n, n)
        offset += size
        out.append(QuantizedDistanceMatrix(classes=_frozen(classes), representative=representative, source_n=n))
    return out


def apply_e3(pc: PointCloud, g: E3Transform) -> PointCloud:
    rot = np.asarray(g.rotation, dtype=np.float64)
    if rot.shape != (3, 3) or not np.allclose(rot.T @ rot, np.eye(3), atol=1e-12, rtol=0.0):
        raise InvalidTransformError("rotation part is not orthogonal")
    coords = pc.coords @ rot.T + np.asarray(g.translation, dtype=np.float64)
    return build_point_cloud(coords, pc.labels)


def random_e3(seed: int) -> E3Transform:
    """시드 고정 임의 E(3) 변환 (반사 확률 1/2, 평행이동 [-10, 10])"""
    rng = np.random.default_rng(seed)
    rot = Rotation.random(random_state=rng).as_matrix()
    if rng.random() < 0.5:
        rot = -rot
    translation = rng.uniform(-10.0, 10.0, size=3)
    return E3Transform(rotation=_frozen(rot), translation=_frozen(translation))


def random_permutation(n: int, seed: int) -> List[int]:
    return [int(p) for p in np.random.default_rng(seed).permutation(n)]


def center_coordinates(pc: PointCloud) -> PointCloud:
    coords = pc.coords - pc.coords.mean(axis=0)
    return build_point_cloud(coords, pc.labels)


# --- 합동 판정 (거리행렬 위의 순열 탐색) ---

def _node_profiles(q: QuantizedDistanceMatrix, labels: Sequence[int]) -> List[tuple]:
    return [(labels[i],) + tuple(sorted(q.classes[i].tolist())) for i in range(q.source_n)]


def _initial_candidates(a: PointCloud, b: PointCloud, tau: float):
    da, db = distance_matrix(a), distance_matrix(b)
    qa, qb = canonicalize_distances([da, db], tau)
    pa, pb = _node_profiles(qa, a.labels), _node_profiles(qb, b.labels)
    cand = np.array([[pa[i] == pb[p] for p in range(b.n)] for i in range(a.n)], dtype=bool)
    return da, db, cand


def _backtrack(da: np.ndarray, db: np.ndarray, tau: float, cand: np.ndarray,
               assign: List[int], used: np.ndarray) -> Iterator[tuple]:
    n = da.shape[0]
    open_nodes = [i for i in range(n) if assign[i] < 0]
    if not open_nodes:
        yield tuple(assign)
        return

    free = cand & ~used[None, :]
    counts = free.sum(axis=1)
    # MRV: 후보가 가장 적은 노드부터
    i = min(open_nodes, key=lambda j: (counts[j], j))
    for p in np.flatnonzero(free[i]):
        p = int(p)
        compat = np.abs(da[i][:, None] - db[p][None, :]) <= tau
        nxt = cand & compat
        nxt[i] = False
        nxt[i, p] = True
        remaining = [j for j in open_nodes if j != i]
        used[p] = True
        if all((nxt[j] & ~used).any() for j in remaining):
            assign[i] = p
            yield from _backtrack(da, db, tau, nxt, assign, used)
            assign[i] = -1
        used[p] = False


def _root_branch(da, db, tau, cand, root: int, p: int, first_only: bool) -> List[tuple]:
    n = da.shape[0]
    assign = [-1] * n
    used = np.zeros(n, dtype=bool)
    compat = np.abs(da[root][:, None] - db[p][None, :]) <= tau
    nxt = cand & compat
    nxt[root] = False
    nxt[root, p] = True
    used[p] = True
    assign[root] = p
    found = []
    if all((nxt[j] & ~used).any() for j in range(n) if j != root):
        for witness in _backtrack(da, db, tau, nxt, assign, used):
            found.append(witness)
            if first_only:
                break
    return found


def enumerate_congruences(a: PointCloud, b: PointCloud, tau: float = config.DEFAULT_TAU) -> Iterator[tuple]:
    """
    a 의 노드 i 를 b 의 노드 π(i) 로 보내는 모든 거리-보존 순열 (라벨 포함).
    a = b 이면 대칭군 전체를 나열한다.
    """
    if a.n != b.n:
        return
    da, db, cand = _initial_candidates(a, b, tau)
    if not cand.any(axis=1).all():
        return
    yield from _backtrack(da, db, tau, cand, [-1] * a.n, np.zeros(a.n, dtype=bool))


def congruent_bruteforce(a: PointCloud, b: PointCloud, tau: float = config.DEFAULT_TAU,
                         threads: int = 1) -> CongruenceVerdict:
    """
    합동 ⇔ 라벨을 보존하며 거리행렬을 맞추는 순열이 존재.
    루트 분기를 병렬로 탐색해도 (가장 작은 루트 후보의) 같은 증인을 돌려준다.
    """
    if a.n != b.n:
        return CongruenceVerdict(congruent=False, witness_permutation=None, max_residual=math.inf)

    da, db, cand = _initial_candidates(a, b, tau)
    if not cand.any(axis=1).all():
        return CongruenceVerdict(congruent=False, witness_permutation=None, max_residual=math.inf)

    counts = cand.sum(axis=1)
    root = int(np.argmin(counts))
    roots = [int(p) for p in np.flatnonzero(cand[root])]

    if threads > 1 and len(roots) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            branches = list(pool.map(lambda p: _root_branch(da, db, tau, cand, root, p, True), roots))
    else:
        branches = []
        for p in roots:
            found = _root_branch(da, db, tau, cand, root, p, True)
            branches.append(found)
            if found:
                break

    for found in branches:
        if found:
            perm = found[0]
            residual = float(np.max(np.abs(da - db[np.ix_(perm, perm)])))
            return CongruenceVerdict(congruent=True, witness_permutation=perm, max_residual=residual)
    return CongruenceVerdict(congruent=False, witness_permutation=None, max_residual=math.inf)
