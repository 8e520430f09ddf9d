# tests/conftest.py
import os
import tempfile

# 프로젝트 모듈이 import 되기 전에 데이터 디렉터리를 임시 경로로
os.environ["DISGNN_DATA_DIR"] = tempfile.mkdtemp(prefix="disgnn-test-")
os.environ.setdefault("DISGNN_THREADS", "2")

import numpy as np
import pytest

from core import database
from services import counterexamples as cx
from services.geometry import build_point_cloud


@pytest.fixture(scope="session", autouse=True)
def _database():
    database.init_db()
    yield


@pytest.fixture
def generic_cloud():
    """거리가 모두 다른 7점 점군"""
    rng = np.random.default_rng(1234)
    return build_point_cloud(rng.uniform(-1.0, 1.0, size=(7, 3)))


@pytest.fixture
def labeled_cloud():
    rng = np.random.default_rng(99)
    return build_point_cloud(rng.uniform(-2.0, 2.0, size=(6, 3)), [0, 1, 1, 2, 0, 3])


@pytest.fixture(scope="session")
def fig2_pair():
    return cx.figure2_pair()


@pytest.fixture(scope="session")
def a1_corpus():
    """정다면체 반례 쌍 전체 (최초 호출 시 부분집합 탐색)"""
    return {family: cx.a1_pair(family) for family in cx.A1_FAMILIES}


@pytest.fixture(scope="session")
def small_aug_corpus(fig2_pair):
    specs = ["ori:1.0,all:2.0", "com:1.5,ori:3.0", "ori:0.7"]
    return [cx.augment_pair(fig2_pair, cx.parse_layer_specs(s)) for s in specs]


@pytest.fixture
def cubeocta_pairs():
    return [cx.cube_octahedron_pair(1.0, 2.0, "red"), cx.cube_octahedron_pair(0.8, 1.3, "blue")]
