# core/config.py
import os
import logging
from dotenv import load_dotenv

# .env 파일은 저장소 루트 기준
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DOTENV_PATH = os.path.join(BASE_DIR, ".env")

if os.path.exists(DOTENV_PATH):
    load_dotenv(dotenv_path=DOTENV_PATH)

logger = logging.getLogger(__name__)


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"⚠️ {name}={raw!r} 는 숫자가 아닙니다. 기본값 {default} 사용")
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"⚠️ {name}={raw!r} 는 정수가 아닙니다. 기본값 {default} 사용")
        return default


# --- 로깅 설정 ---
LOG_LEVEL_STR = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_LEVEL = getattr(logging, LOG_LEVEL_STR, logging.INFO)

# --- 거리 양자화 & 정제 엔진 ---
DEFAULT_TAU = _env_float("DISGNN_TAU", 1e-9)
MAX_TUPLES = _env_int("DISGNN_MAX_TUPLES", 2_000_000)
THREADS = max(1, _env_int("DISGNN_THREADS", os.cpu_count() or 1))

# --- 연속 모델 기본값 ---
HIDDEN_DIM = _env_int("DISGNN_HIDDEN_DIM", 32)
RBF_DIM = _env_int("DISGNN_RBF_DIM", 16)
LABEL_DIM = _env_int("DISGNN_LABEL_DIM", 8)
LABEL_VOCAB = 128
RBF_BETA = _env_float("DISGNN_RBF_BETA", 10.0)

# --- 리포트 / 파일 포맷 ---
SCHEMA_VERSION = 1
REPORT_FLOAT_DIGITS = 12
XYZ_FLOAT_DIGITS = 17

# --- 데이터베이스 파일 경로 ---
DATA_DIR = os.getenv("DISGNN_DATA_DIR", os.path.join(BASE_DIR, "data"))
if not os.path.exists(DATA_DIR):
    os.makedirs(DATA_DIR)
DB_FILE = os.path.join(DATA_DIR, "derivations.db")
SUBSET_CACHE = os.getenv("DISGNN_SUBSET_CACHE", "1").strip() != "0"
