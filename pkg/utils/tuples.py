# utils/tuples.py
"""
k-튜플 텐서 축 연산 (이산 엔진과 연속 모델이 공유)

튜플 텐서는 앞쪽 k개 축이 노드 인덱스 (v_0, ..., v_{k-1}) 이고,
나머지 축(있다면)은 특징 차원이다.
"""
from itertools import combinations
from typing import List, Tuple

import numpy as np


def replace_position(arr: np.ndarray, j: int, k: int) -> np.ndarray:
    """
    out[v_0..v_{k-1}, w, ...] = arr[v with v_j := w, ...]

    반환 shape: (n,)*k + (n,) + arr.shape[k:]  (v_j 축은 broadcast)
    """
    n = arr.shape[0]
    moved = np.moveaxis(arr, j, k - 1)  # v_j 축이 튜플 축의 마지막(w)으로
    expanded = np.expand_dims(moved, axis=j)
    return np.broadcast_to(expanded, (n,) * k + (n,) + arr.shape[k:])


def edge_along(edge: np.ndarray, j: int, k: int) -> np.ndarray:
    """
    out[v_0..v_{k-1}, w, ...] = edge[v_j, w, ...]
    """
    n = edge.shape[0]
    shape = [1] * k + [n] + list(edge.shape[2:])
    shape[j] = n
    return np.broadcast_to(edge.reshape(shape), (n,) * k + (n,) + edge.shape[2:])


def tuple_indices(n: int, k: int) -> np.ndarray:
    """(k, n^k) 배열: C 순서로 나열한 모든 튜플의 노드 인덱스"""
    return np.indices((n,) * k).reshape(k, -1)


def diagonal_mask(n: int, k: int) -> np.ndarray:
    """모든 원소가 같은 노드인 튜플 (i, i, ..., i) 표시, shape (n^k,)"""
    idx = tuple_indices(n, k)
    return np.all(idx == idx[0], axis=0)


def position_pairs(k: int) -> List[Tuple[int, int]]:
    return list(combinations(range(k), 2))


def equality_pattern_codes(n: int, k: int) -> np.ndarray:
    """튜플마다 (i<j) 위치쌍의 동일 여부를 비트로 묶은 코드, shape (n^k,)"""
    idx = tuple_indices(n, k)
    codes = np.zeros(idx.shape[1], dtype=np.int64)
    for bit, (a, b) in enumerate(position_pairs(k)):
        codes |= (idx[a] == idx[b]).astype(np.int64) << bit
    return codes

