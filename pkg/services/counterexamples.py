# services/counterexamples.py
"""
반례 쌍 생성기 (정다면체 부분집합, 정육면체+정팔면체, 두 정육면체, AUG 확장)와 검증 프로그램
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import golden

from core import config, database
from core.errors import ConfigurationError, CounterexampleSearchError
from services.geometry import (
    CongruenceVerdict,
    PointCloud,
    build_point_cloud,
    canonicalize_distances,
    congruent_bruteforce,
    distance_matrix,
    enumerate_congruences,
)
from services.wl_engine import (
    DistanceGraph,
    RefinementConfig,
    Verdict,
    distance_graphs,
    distinguish,
    first_separation,
    refine_joint,
)

logger = logging.getLogger(__name__)

POLYHEDRON_KINDS = ("icosahedron", "dodecahedron", "cube", "octahedron")
LAYER_TYPES = ("ori", "com", "all")

# 부분집합 패밀리 → (다면체, 캐시 variant 키)
A1_FAMILIES = {
    "fig2": ("icosahedron", "fig2"),
    "dodec6": ("dodecahedron", "size6"),
    "dodec14": ("dodecahedron", "size14"),
    "dodec8": ("dodecahedron", "size8"),
    "dodec12": ("dodecahedron", "size12"),
    "dodec10a": ("dodecahedron", "size10a"),
    "dodec10b": ("dodecahedron", "size10b"),
}
DODECAHEDRON_VARIANTS = ("size6", "size14", "size8", "size12", "size10a", "size10b")

# 노드 종류(kind) 크기, 내림차순. dodec6 은 종류 개수(2)만 알려져 있음
EXPECTED_KINDS: Dict[str, Optional[tuple]] = {
    "fig2": (6,),
    "dodec6": None,
    "dodec14": (4, 4, 4, 2),
    "dodec8": (4, 4),
    "dodec12": (4, 4, 2, 2),
    "dodec10a": (4, 4, 2),
    "dodec10b": (10,),
}
EXPECTED_KIND_COUNT = {
    "fig2": 1,
    "dodec6": 2,
    "dodec14": 4,
    "dodec8": 2,
    "dodec12": 4,
    "dodec10a": 3,
    "dodec10b": 1,
}


@dataclass(frozen=True, eq=False)
class Polyhedron:
    kind: str
    circumradius: float
    vertices: np.ndarray

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def cloud(self, indices: Optional[Sequence[int]] = None, scale: float = 1.0) -> PointCloud:
        idx = list(range(self.n)) if indices is None else list(indices)
        return build_point_cloud(self.vertices[idx] * scale)


@dataclass(frozen=True, eq=False)
class CounterexamplePair:
    left: PointCloud
    right: PointCloud
    family: str
    params: dict = field(default_factory=dict)
    expected_kinds: Optional[tuple] = None
    expected_kind_count: Optional[int] = None
    note: str = ""


@dataclass(frozen=True)
class LayerSpec:
    layer_type: str
    radius: float

    def __post_init__(self):
        if self.layer_type not in LAYER_TYPES:
            raise ConfigurationError(f"unknown layer type {self.layer_type!r} (choose from ori, com, all)")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigurationError(f"layer radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class LabelState:
    assignment: Dict[int, int]

    def labels_for(self, nodes: Sequence[int]) -> List[int]:
        return [self.assignment[v] for v in nodes]

    def merged(self, other: "LabelState") -> "LabelState":
        return LabelState({**self.assignment, **other.assignment})


@dataclass(frozen=True)
class SubsetCandidate:
    left: tuple
    right: tuple
    kinds: tuple


@dataclass(frozen=True)
class VerificationReport:
    family: str
    params: dict
    oracle: CongruenceVerdict
    wl: Verdict
    kinds: tuple
    kinds_right: tuple
    expected_kinds: Optional[tuple]
    expected_kind_count: Optional[int]
    passed: bool
    reasons: tuple
    note: str = ""

    @property
    def kinds_match(self) -> Optional[bool]:
        if self.expected_kinds is None and self.expected_kind_count is None:
            return None
        ok = True
        if self.expected_kinds is not None:
            ok = ok and tuple(self.kinds) == tuple(self.expected_kinds)
        if self.expected_kind_count is not None:
            ok = ok and len(self.kinds) == self.expected_kind_count
        return ok


# --- 정다면체 ---

def _signed(pattern: Sequence[float]) -> List[List[float]]:
    """0 이 아닌 성분마다 ± 부호 조합 (순서 고정)"""
    nonzero = [i for i, v in enumerate(pattern) if v != 0]
    out = []
    for signs in product((1.0, -1.0), repeat=len(nonzero)):
        vec = list(pattern)
        for i, s in zip(nonzero, signs):
            vec[i] = s * vec[i]
        out.append(vec)
    return out


def polyhedron(kind: str, circumradius: float = 1.0) -> Polyhedron:
    if kind not in POLYHEDRON_KINDS:
        raise ValueError(f"unknown polyhedron {kind!r}")
    if not circumradius > 0:
        raise ValueError("circumradius must be positive")

    phi = golden
    if kind == "icosahedron":
        raw = _signed([0, 1, phi]) + _signed([1, phi, 0]) + _signed([phi, 0, 1])
    elif kind == "dodecahedron":
        raw = (_signed([1, 1, 1]) + _signed([0, 1 / phi, phi])
               + _signed([1 / phi, phi, 0]) + _signed([phi, 0, 1 / phi]))
    elif kind == "cube":
        raw = _signed([1, 1, 1])
    else:
        raw = _signed([1, 0, 0]) + _signed([0, 1, 0]) + _signed([0, 0, 1])

    verts = np.array(raw, dtype=np.float64)
    verts *= circumradius / np.linalg.norm(verts[0])
    verts.flags.writeable = False
    return Polyhedron(kind=kind, circumradius=float(circumradius), vertices=verts)


@lru_cache(maxsize=None)
def symmetry_group(kind: str, tau: float = config.DEFAULT_TAU) -> np.ndarray:
    """꼭짓점 순열로 표현한 전체 대칭군 (반사 포함), shape (|G|, n)"""
    cloud = polyhedron(kind).cloud()
    perms = np.array(sorted(enumerate_congruences(cloud, cloud, tau)), dtype=np.int64)
    perms.flags.writeable = False
    logger.debug(f"{kind} 대칭군 크기: {len(perms)}")
    return perms


def _powers(n: int) -> np.ndarray:
    return np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))


def canonical_mask(subset: Sequence[int], group: np.ndarray) -> int:
    """궤도 안에서 가장 작은 비트마스크"""
    powers = _powers(group.shape[1])
    return int(powers[group[:, list(subset)]].sum(axis=1).min())


def orbit_representatives(n: int, size: int, group: np.ndarray) -> List[tuple]:
    """크기 size 부분집합의 대칭 궤도마다 비트마스크가 가장 작은 원소 하나"""
    if not 0 < size < n:
        return [tuple(range(n))] if size == n else []
    combos = np.array(list(combinations(range(n), size)), dtype=np.int64)
    powers = _powers(n)
    masks = powers[combos].sum(axis=1)
    canon = masks.copy()
    for g in group:
        np.minimum(canon, powers[g[combos]].sum(axis=1), out=canon)
    reps = combos[masks == canon]
    return [tuple(int(v) for v in r) for r in reps]


def _pair_key(left: Sequence[int], right: Sequence[int], group: np.ndarray, n: int) -> tuple:
    """대칭, 좌우 교환, 여집합을 무시한 쌍의 정규 키"""
    direct = tuple(sorted((canonical_mask(left, group), canonical_mask(right, group))))
    complement = tuple(sorted((canonical_mask(_complement(left, n), group), canonical_mask(_complement(right, n), group))))
    return min(direct, complement)


def _complement(subset: Sequence[int], n: int) -> tuple:
    chosen = set(subset)
    return tuple(v for v in range(n) if v not in chosen)


# --- 부분집합 탐색 ---

def _subset_graphs(poly: Polyhedron, subsets: Sequence[Sequence[int]], tau: float) -> List[DistanceGraph]:
    (q,) = canonicalize_distances([distance_matrix(poly.cloud())], tau)
    return [DistanceGraph(classes=q.classes[np.ix_(list(s), list(s))], labels=(0,) * len(s)) for s in subsets]


def _pair_profile(poly: Polyhedron, left: Sequence[int], right: Sequence[int], tau: float):
    """(1-WL-E 구분 불가 여부, 합동 여부, 왼쪽 kinds)"""
    results = refine_joint(_subset_graphs(poly, [left, right], tau), RefinementConfig("wl1e", tau=tau))
    indistinguishable = first_separation(results) is None
    congruent = congruent_bruteforce(poly.cloud(left), poly.cloud(right), tau).congruent
    return indistinguishable, congruent, results[0].kinds


def search_subset_pairs(kind: str, size: int, tau: float = config.DEFAULT_TAU) -> List[SubsetCandidate]:
    """
    같은 크기의 꼭짓점 부분집합 쌍 중 1-WL-E 로 구분되지 않지만 합동이 아닌 것 (대칭 궤도 대표끼리).
    궤도 대표 전체를 한 번에 정제해 히스토그램으로 묶은 뒤, 같은 묶음 안에서만 오라클을 돌린다.
    """
    poly = polyhedron(kind)
    group = symmetry_group(kind, tau)
    reps = orbit_representatives(poly.n, size, group)
    if len(reps) < 2:
        return []

    results = refine_joint(_subset_graphs(poly, reps, tau), RefinementConfig("wl1e", tau=tau))
    buckets: Dict[tuple, List[int]] = {}
    for idx, res in enumerate(results):
        key = tuple(sorted(res.per_round_histograms[-1].items()))
        buckets.setdefault(key, []).append(idx)

    found = []
    for members in buckets.values():
        for i, j in combinations(members, 2):
            verdict = congruent_bruteforce(poly.cloud(reps[i]), poly.cloud(reps[j]), tau)
            if not verdict.congruent:
                found.append(SubsetCandidate(left=reps[i], right=reps[j], kinds=results[i].kinds))
    found.sort(key=lambda c: (c.left, c.right))
    logger.info(f"🔎 {kind} size {size}: 궤도 {len(reps)}개, 반례 후보 {len(found)}개")
    return found


def _contains_image(big: Sequence[int], small: Sequence[int], group: np.ndarray) -> bool:
    powers = _powers(group.shape[1])
    big_mask = int(powers[list(big)].sum())
    images = powers[group[:, list(small)]].sum(axis=1)
    return bool(np.any((images & big_mask) == images))


def _pick(candidates: List[Tuple[tuple, tuple]], what: str) -> Tuple[tuple, tuple, str]:
    if not candidates:
        raise CounterexampleSearchError(f"no vertex subsets satisfy the constraints for {what}")
    ordered = sorted(candidates)
    note = ""
    if len(ordered) > 1:
        note = f"{len(ordered)} non-symmetric solutions; picked the lexicographically smallest"
        logger.warning(f"⚠️ {what}: {note}")
    left, right = ordered[0]
    return left, right, note


def _derive_icosahedron(tau: float) -> Dict[str, Tuple[tuple, tuple, str]]:
    poly = polyhedron("icosahedron")
    group = symmetry_group("icosahedron", tau)
    unique: Dict[tuple, SubsetCandidate] = {}
    for size in range(1, poly.n):
        for cand in search_subset_pairs("icosahedron", size, tau):
            key = _pair_key(cand.left, cand.right, group, poly.n)
            best = unique.get(key)
            if best is None or (len(cand.left), cand.left, cand.right) < (len(best.left), best.left, best.right):
                unique[key] = cand
    if len(unique) != 1:
        raise CounterexampleSearchError(
            f"expected exactly one icosahedron counterexample up to symmetry, found {len(unique)}"
        )
    cand = next(iter(unique.values()))
    left, right = cand.left, cand.right
    edge = _edge_length(poly)
    # 작은 정삼각형이 없는 쪽이 왼쪽
    if count_regular_polygons(poly.cloud(left), 3, edge, tau) > count_regular_polygons(poly.cloud(right), 3, edge, tau):
        left, right = right, left
    return {"fig2": (left, right, "")}


def _derive_dodecahedron(tau: float) -> Dict[str, Tuple[tuple, tuple, str]]:
    poly = polyhedron("dodecahedron")
    group = symmetry_group("dodecahedron", tau)
    n = poly.n
    out: Dict[str, Tuple[tuple, tuple, str]] = {}

    def complement_ok(cand: SubsetCandidate, kinds: tuple) -> bool:
        cl, cr = _complement(cand.left, n), _complement(cand.right, n)
        indist, congruent, comp_kinds = _pair_profile(poly, cl, cr, tau)
        return indist and not congruent and comp_kinds == kinds

    # 6 / 14: 서로 여집합
    six = [c for c in search_subset_pairs("dodecahedron", 6, tau)
           if len(c.kinds) == 2 and complement_ok(c, EXPECTED_KINDS["dodec14"])]
    l6, r6, note6 = _pick([(c.left, c.right) for c in six], "dodecahedron size6")
    out["size6"] = (l6, r6, note6)
    out["size14"] = (_complement(l6, n), _complement(r6, n), note6)

    # 8 / 12: 6-크기 그래프에 두 노드를 추가한 것, 그 여집합
    eights = [c for c in search_subset_pairs("dodecahedron", 8, tau)
              if c.kinds == EXPECTED_KINDS["dodec8"] and complement_ok(c, EXPECTED_KINDS["dodec12"])]
    nested = []
    for c in eights:
        if _contains_image(c.left, l6, group) and _contains_image(c.right, r6, group):
            nested.append((c.left, c.right))
        elif _contains_image(c.right, l6, group) and _contains_image(c.left, r6, group):
            nested.append((c.right, c.left))
    if nested:
        l8, r8, note8 = _pick(nested, "dodecahedron size8")
    else:
        l8, r8, note8 = _pick([(c.left, c.right) for c in eights], "dodecahedron size8")
        note8 = "; ".join(filter(None, ["no solution contains the size6 pair", note8]))
        logger.warning(f"⚠️ dodecahedron size8: {note8}")
    out["size8"] = (l8, r8, note8)
    out["size12"] = (_complement(l8, n), _complement(r8, n), note8)

    tens = search_subset_pairs("dodecahedron", 10, tau)
    out["size10a"] = _pick([(c.left, c.right) for c in tens if c.kinds == EXPECTED_KINDS["dodec10a"]],
                           "dodecahedron size10a")

    edge = _edge_length(poly)
    with_pentagons = []
    for c in tens:
        if c.kinds != EXPECTED_KINDS["dodec10b"]:
            continue
        pl = count_regular_polygons(poly.cloud(c.left), 5, edge, tau)
        pr = count_regular_polygons(poly.cloud(c.right), 5, edge, tau)
        if max(pl, pr) >= 2:
            with_pentagons.append((c.left, c.right) if pl >= pr else (c.right, c.left))
    out["size10b"] = _pick(with_pentagons, "dodecahedron size10b")
    return out


_DERIVERS = {"icosahedron": _derive_icosahedron, "dodecahedron": _derive_dodecahedron}
_MEMO: Dict[Tuple[str, str], Tuple[tuple, tuple, str]] = {}
_MEMO_LOCK = threading.Lock()


def derived_subsets(kind: str, variant: str, tau: float = config.DEFAULT_TAU) -> Tuple[tuple, tuple, str]:
    """(left, right, note): 메모리 → SQLite 캐시 → 탐색 순으로 조회"""
    key = (kind, variant)
    with _MEMO_LOCK:
        if key in _MEMO:
            return _MEMO[key]

        database.init_db()
        cached = database.get_derived_pair(kind, variant)
        if cached is not None:
            left, right, note = cached
            _MEMO[key] = (tuple(left), tuple(right), note)
            return _MEMO[key]

        logger.info(f"⏳ {kind} 부분집합 탐색 시작 (최초 1회)")
        derived = _DERIVERS[kind](tau)
        for name, (left, right, note) in derived.items():
            database.save_derived_pair(kind, name, list(left), list(right), note)
            _MEMO[(kind, name)] = (tuple(left), tuple(right), note)
        logger.info(f"✅ {kind} 부분집합 탐색 완료: {', '.join(sorted(derived))}")
        if key not in _MEMO:
            raise CounterexampleSearchError(f"unknown {kind} variant {variant!r}")
        return _MEMO[key]


def _edge_length(poly: Polyhedron) -> float:
    d = distance_matrix(poly.cloud())
    return float(d[d > 0].min())


def _subset_pair(family: str, tau: float) -> CounterexamplePair:
    kind, variant = A1_FAMILIES[family]
    left, right, note = derived_subsets(kind, variant, tau)
    poly = polyhedron(kind)
    return CounterexamplePair(
        left=poly.cloud(left),
        right=poly.cloud(right),
        family=family,
        params={"polyhedron": kind, "variant": variant, "left_indices": list(left), "right_indices": list(right)},
        expected_kinds=EXPECTED_KINDS[family],
        expected_kind_count=EXPECTED_KIND_COUNT[family],
        note=note,
    )


def figure2_pair(tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    """정이십면체 6-꼭짓점 쌍: 지그재그 고리 vs 마주보는 두 면"""
    return _subset_pair("fig2", tau)


def dodecahedron_pair(variant: str, tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    if variant not in DODECAHEDRON_VARIANTS:
        raise ValueError(f"unknown dodecahedron variant {variant!r}")
    family = "dodec" + variant[len("size"):]
    return _subset_pair(family, tau)


def a1_pair(family: str, tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    if family not in A1_FAMILIES:
        raise ValueError(f"{family!r} is not a regular-polyhedron family")
    return _subset_pair(family, tau)


# --- 매개변수 패밀리 ---

def cube_octahedron_pair(a: float, b: float, variant: str = "red") -> CounterexamplePair:
    """
    중심을 공유하는 정육면체(한 변 2a)와 정팔면체(꼭짓점 거리 b), 팔면체 꼭짓점은 면 중심 방향.
    red: 팔면체 꼭짓점 2개 + 정육면체 꼭짓점 4개, blue: 팔면체 꼭짓점 4개 + 정육면체 꼭짓점 4개
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if variant == "red":
        octa = [(0, 0, b), (0, 0, -b)]
        left_cube = [(a, a, a), (-a, -a, a), (a, a, -a), (-a, -a, -a)]
        right_cube = [(a, a, a), (a, -a, a), (-a, a, -a), (-a, -a, -a)]
        expected = (4, 2)
    elif variant == "blue":
        octa = [(b, 0, 0), (-b, 0, 0), (0, 0, b), (0, 0, -b)]
        left_cube = [(a, a, a), (a, -a, a), (-a, a, -a), (-a, -a, -a)]
        right_cube = [(a, a, a), (-a, -a, a), (a, a, -a), (-a, -a, -a)]
        expected = (4, 4)
    else:
        raise ValueError(f"unknown variant {variant!r} (red or blue)")

    return CounterexamplePair(
        left=build_point_cloud(octa + left_cube),
        right=build_point_cloud(octa + right_cube),
        family="cubeocta",
        params={"a": float(a), "b": float(b), "variant": variant},
        expected_kinds=expected,
        expected_kind_count=len(expected),
    )


def two_cubes_pair(a1: float, a2: float, tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    """
    중심과 z 면축을 공유하는 두 정육면체(한 변 2a1, 2a2). 두 번째 정육면체는 z 축으로 45° 돌아가 있다.
    양쪽 모두 첫 정육면체의 대각 단면 x=y 를 쓰고, 두 번째 정육면체에서는
    왼쪽이 수직 단면 y=0, 오른쪽이 기울어진 대각 단면을 쓴다.
    각 꼭짓점은 자기 단면 안에서 (모서리, 면 대각선, 공간 대각선) 거리를 하나씩,
    다른 정육면체 쪽으로는 네 가지 교차 거리를 하나씩 가지므로 1-WL-E 가 양쪽을 구분하지 못한다.
    왼쪽의 짧은 변 4개는 모두 z 축에 평행하지만 오른쪽은 2개만 그렇다.
    """
    if not (a1 > 0 and a2 > 0):
        raise ValueError("a1 and a2 must be positive")

    s = math.sqrt(2.0) * a2
    first = [(a1, a1, a1), (a1, a1, -a1), (-a1, -a1, a1), (-a1, -a1, -a1)]
    left = first + [(s, 0.0, a2), (s, 0.0, -a2), (-s, 0.0, a2), (-s, 0.0, -a2)]
    right = first + [(0.0, s, a2), (-s, 0.0, a2), (0.0, -s, -a2), (s, 0.0, -a2)]
    expected = (8,) if abs(a1 - a2) <= tau else (4, 4)
    return CounterexamplePair(
        left=build_point_cloud(left),
        right=build_point_cloud(right),
        family="twocubes",
        params={"a1": float(a1), "a2": float(a2)},
        expected_kinds=expected,
        expected_kind_count=len(expected),
    )


# --- AUG 확장 ---

def parse_layer_specs(text: str) -> List[LayerSpec]:
    """'ori:1.0,all:2.0,com:3' 형식"""
    specs = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        layer_type, sep, radius = chunk.partition(":")
        if not sep:
            raise ConfigurationError(f"layer {chunk!r} must look like type:radius")
        try:
            value = float(radius)
        except ValueError as e:
            raise ConfigurationError(f"layer {chunk!r} has a non-numeric radius") from e
        specs.append(LayerSpec(layer_type.strip(), value))
    return specs


def _base_indices(base: CounterexamplePair) -> Tuple[Polyhedron, tuple, tuple]:
    params = base.params
    if base.family not in A1_FAMILIES or not {"polyhedron", "left_indices", "right_indices"} <= set(params):
        raise ConfigurationError(f"base must be a regular-polyhedron pair, got family {base.family!r}")
    return polyhedron(params["polyhedron"]), tuple(params["left_indices"]), tuple(params["right_indices"])


def augment_pair(base: CounterexamplePair, spec: Sequence[LayerSpec], tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    """
    (Q_i, r_i) 층을 같은 중심/방향으로 쌓은 합집합. 층은 단위 외접 반지름 다면체를 r_i 배 확대한 것.
    """
    if not spec:
        raise ConfigurationError("AUG needs at least one layer")
    radii = sorted(layer.radius for layer in spec)
    if any(b - a <= 10 * tau for a, b in zip(radii, radii[1:])):
        raise ConfigurationError("layer radii must be pairwise distinct")
    if all(layer.layer_type == "all" for layer in spec):
        raise ConfigurationError("at least one layer must be ori or com")

    poly, left_idx, right_idx = _base_indices(base)
    everything = tuple(range(poly.n))
    choose = {
        "ori": (left_idx, right_idx),
        "com": (_complement(left_idx, poly.n), _complement(right_idx, poly.n)),
        "all": (everything, everything),
    }
    left_pts, right_pts = [], []
    for layer in spec:
        li, ri = choose[layer.layer_type]
        left_pts.append(poly.vertices[list(li)] * layer.radius)
        right_pts.append(poly.vertices[list(ri)] * layer.radius)

    return CounterexamplePair(
        left=build_point_cloud(np.concatenate(left_pts)),
        right=build_point_cloud(np.concatenate(right_pts)),
        family="aug",
        params={
            "base": base.family,
            "layers": [{"type": layer.layer_type, "radius": float(layer.radius)} for layer in spec],
        },
    )


def complementary_labels(base: CounterexamplePair, tau: float = config.DEFAULT_TAU):
    """
    𝓛_ori, 𝓛_com: ori 쌍과 com 쌍을 각각 1-WL-E 로 안정화한 색 (ori 는 짝수, com 은 홀수 라벨).
    반환: ((L_ori, L_com), (R_ori, R_com)), 키는 다면체 꼭짓점 번호
    """
    poly, left_idx, right_idx = _base_indices(base)
    left_com, right_com = _complement(left_idx, poly.n), _complement(right_idx, poly.n)
    wl1e = RefinementConfig("wl1e", tau=tau)

    def stable(left, right, offset):
        res = refine_joint(_subset_graphs(poly, [left, right], tau), wl1e)
        return (
            LabelState({v: 2 * c + offset for v, c in zip(left, res[0].node_colors)}),
            LabelState({v: 2 * c + offset for v, c in zip(right, res[1].node_colors)}),
        )

    l_ori, r_ori = stable(left_idx, right_idx, 0)
    l_com, r_com = stable(left_com, right_com, 1) if left_com else (LabelState({}), LabelState({}))
    return (l_ori, l_com), (r_ori, r_com)


def full_polyhedron_pair(base: CounterexamplePair, tau: float = config.DEFAULT_TAU) -> CounterexamplePair:
    """(G_all^L, G_all^R): 전체 다면체에 𝓛_ori ∪ 𝓛_com 라벨"""
    poly, _, _ = _base_indices(base)
    (l_ori, l_com), (r_ori, r_com) = complementary_labels(base, tau)
    nodes = range(poly.n)
    return CounterexamplePair(
        left=build_point_cloud(poly.vertices, l_ori.merged(l_com).labels_for(nodes)),
        right=build_point_cloud(poly.vertices, r_ori.merged(r_com).labels_for(nodes)),
        family="all",
        params={"base": base.family, "polyhedron": poly.kind},
    )


def verify_stable_state(pair_all: CounterexamplePair, init: Tuple[LabelState, LabelState],
                        tau: float = config.DEFAULT_TAU) -> bool:
    """init 에서 1-WL-E 한 라운드: 어느 쪽도 세분되지 않고 두 히스토그램이 같으면 True"""
    left_state, right_state = init
    left_labels = left_state.labels_for(range(pair_all.left.n))
    right_labels = right_state.labels_for(range(pair_all.right.n))
    if pair_all.left.n != pair_all.right.n:
        return False

    graphs = distance_graphs([pair_all.left, pair_all.right], tau, labels=[left_labels, right_labels])
    results = refine_joint(graphs, RefinementConfig("wl1e", rounds=1, tau=tau))
    for res in results:
        counts = res.per_round_class_counts
        if counts[-1] != counts[0]:
            return False
    return all(
        results[0].per_round_histograms[t] == results[1].per_round_histograms[t]
        for t in range(len(results[0].per_round_histograms))
    )


# --- 정다각형 세기 ---

def _regular_polygon_template(sides: int) -> np.ndarray:
    radius = 1.0 / (2.0 * math.sin(math.pi / sides))
    angles = 2.0 * math.pi * np.arange(sides) / sides
    return np.stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(sides)], axis=1)


def count_regular_polygons(pc: PointCloud, sides: int, edge_length: Optional[float] = None,
                           tau: float = config.DEFAULT_TAU) -> int:
    """정 sides 각형을 이루는 꼭짓점 집합의 개수 (edge_length 를 주면 그 변 길이만)"""
    if sides < 3:
        raise ValueError("a polygon needs at least 3 sides")
    if pc.n < sides:
        return 0
    d = distance_matrix(pc)
    template = _regular_polygon_template(sides)
    unit_rows = np.sort(distance_matrix(build_point_cloud(template))[0])
    count = 0
    for combo in combinations(range(pc.n), sides):
        sub = d[np.ix_(combo, combo)]
        side = float(np.sort(sub[0])[1])
        if side <= tau:
            continue
        if edge_length is not None and abs(side - edge_length) > tau:
            continue
        if np.any(np.abs(np.sort(sub, axis=1) - unit_rows * side) > max(tau, 1e-9 * side)):
            continue
        if sides > 5:
            shape = build_point_cloud(template * side)
            if not congruent_bruteforce(build_point_cloud(pc.coords[list(combo)]), shape, max(tau, 1e-9 * side)).congruent:
                continue
        count += 1
    return count


# --- 검증 ---

def verify_counterexample(pair: CounterexamplePair, tau: float = config.DEFAULT_TAU,
                          threads: int = 1) -> VerificationReport:
    """오라클(비합동) + 1-WL-E(구분 불가) + 안정 kind 히스토그램 + 기대값 비교"""
    oracle = congruent_bruteforce(pair.left, pair.right, tau, threads=threads)
    wl_cfg = RefinementConfig("wl1e", tau=tau)
    wl = distinguish(pair.left, pair.right, wl_cfg)

    if pair.left.n == pair.right.n:
        results = refine_joint(distance_graphs([pair.left, pair.right], tau), wl_cfg)
        kinds, kinds_right = results[0].kinds, results[1].kinds
    else:
        kinds = refine_joint(distance_graphs([pair.left], tau), wl_cfg)[0].kinds
        kinds_right = refine_joint(distance_graphs([pair.right], tau), wl_cfg)[0].kinds

    reasons = []
    if oracle.congruent:
        reasons.append("congruent")
    if wl.distinguished:
        reasons.append(f"distinguished by 1-WL-E at round {wl.separation_round}")
    if pair.expected_kinds is not None and tuple(kinds) != tuple(pair.expected_kinds):
        reasons.append(f"kinds {list(kinds)} != expected {list(pair.expected_kinds)}")
    if pair.expected_kind_count is not None and len(kinds) != pair.expected_kind_count:
        reasons.append(f"{len(kinds)} kinds != expected {pair.expected_kind_count}")

    report = VerificationReport(
        family=pair.family,
        params=dict(pair.params),
        oracle=oracle,
        wl=wl,
        kinds=tuple(kinds),
        kinds_right=tuple(kinds_right),
        expected_kinds=pair.expected_kinds,
        expected_kind_count=pair.expected_kind_count,
        passed=not reasons,
        reasons=tuple(reasons),
        note=pair.note,
    )
    if reasons:
        logger.error(f"❌ {pair.family} {pair.params}: {'; '.join(reasons)}")
    return report
