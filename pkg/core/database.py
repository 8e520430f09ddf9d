# core/database.py
import json
import sqlite3
import logging
from typing import List, Optional, Tuple

# 같은 폴더(package) 내의 config 모듈 임포트
from . import config

logger = logging.getLogger(__name__)


def init_db():
    """DB 테이블 초기화"""
    conn = None
    try:
        conn = sqlite3.connect(config.DB_FILE)
        cursor = conn.cursor()

        # 1. 탐색으로 얻은 정다면체 꼭짓점 부분집합
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS derived_pairs (
                polyhedron TEXT NOT NULL,
                variant TEXT NOT NULL,
                left_indices TEXT NOT NULL,
                right_indices TEXT NOT NULL,
                note TEXT NOT NULL DEFAULT '',
                derived_at DATETIME DEFAULT CURRENT_TIMESTAMP,
                PRIMARY KEY (polyhedron, variant)
            )
        """)

        # 2. 코퍼스 스위트 실행 기록
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS suite_runs (
                run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                suite TEXT NOT NULL,
                corpus_dir TEXT NOT NULL,
                pairs INTEGER NOT NULL,
                failures INTEGER NOT NULL,
                ran_at DATETIME DEFAULT CURRENT_TIMESTAMP
            )
        """)

        conn.commit()
        logger.debug(f"데이터베이스 초기화 완료: {config.DB_FILE}")
    except Exception as e:
        logger.error(f"DB 초기화 실패: {e}")
    finally:
        if conn: conn.close()


# --- 부분집합 캐시 ---

def get_derived_pair(polyhedron: str, variant: str) -> Optional[Tuple[List[int], List[int], str]]:
    """캐시된 (left, right, note) 조회. 없거나 캐시 비활성화 시 None"""
    if not config.SUBSET_CACHE:
        return None
    conn = None
    try:
        conn = sqlite3.connect(config.DB_FILE)
        cursor = conn.cursor()
        cursor.execute(
            "SELECT left_indices, right_indices, note FROM derived_pairs WHERE polyhedron=? AND variant=?",
            (polyhedron, variant),
        )
        row = cursor.fetchone()
    except sqlite3.Error as e:
        logger.error(f"캐시 조회 실패: {e}")
        return None
    finally:
        if conn: conn.close()
    if row is None:
        return None
    return json.loads(row[0]), json.loads(row[1]), row[2]


def save_derived_pair(polyhedron: str, variant: str, left: List[int], right: List[int], note: str = ""):
    """탐색 결과 저장"""
    if not config.SUBSET_CACHE:
        return
    conn = None
    try:
        conn = sqlite3.connect(config.DB_FILE)
        cursor = conn.cursor()
        cursor.execute(
            "INSERT OR REPLACE INTO derived_pairs (polyhedron, variant, left_indices, right_indices, note) "
            "VALUES (?, ?, ?, ?, ?)",
            (polyhedron, variant, json.dumps(list(left)), json.dumps(list(right)), note),
        )
        conn.commit()
    except sqlite3.Error as e:
        logger.error(f"캐시 기록 실패: {e}")
    finally:
        if conn: conn.close()


# --- 스위트 실행 기록 ---

def record_suite_run(suite: str, corpus_dir: str, pairs: int, failures: int):
    conn = sqlite3.connect(config.DB_FILE)
    cursor = conn.cursor()
    try:
        cursor.execute(
            "INSERT INTO suite_runs (suite, corpus_dir, pairs, failures) VALUES (?, ?, ?, ?)",
            (suite, corpus_dir, pairs, failures),
        )
        conn.commit()
    except Exception as e:
        logger.error(f"스위트 기록 실패: {e}")
    finally:
        conn.close()


def get_suite_runs(limit: int = 20) -> List[Tuple[str, str, int, int, str]]:
    """최근 스위트 실행 기록"""
    conn = sqlite3.connect(config.DB_FILE)
    cursor = conn.cursor()
    cursor.execute(
        "SELECT suite, corpus_dir, pairs, failures, ran_at FROM suite_runs ORDER BY run_id DESC LIMIT ?",
        (limit,),
    )
    rows = cursor.fetchall()
    conn.close()
    return rows
