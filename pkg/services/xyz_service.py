# services/xyz_service.py
"""XYZ 파일 읽기/쓰기, 쌍 디렉터리(left.xyz / right.xyz / params.json) 입출력"""
import json
import logging
import math
import os
from typing import List, Tuple, Union

from core import config
from core.errors import InvalidPointCloudError, XyzParseError
from services.counterexamples import CounterexamplePair
from services.geometry import PointCloud, build_point_cloud

logger = logging.getLogger(__name__)

LEFT_FILE = "left.xyz"
RIGHT_FILE = "right.xyz"
PARAMS_FILE = "params.json"


def parse_xyz(text: str) -> PointCloud:
    """
    1행: 점 개수, 2행: 주석, 이후 'label x y z' 레코드.
    오류 메시지에는 1부터 세는 줄 번호가 붙는다.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise XyzParseError(1, "missing atom count")
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise XyzParseError(1, f"atom count {lines[0].strip()!r} is not an integer")
    if count < 1:
        raise XyzParseError(1, f"atom count must be positive, got {count}")

    records = [(no, line) for no, line in enumerate(lines[2:], start=3) if line.strip()]
    if len(records) != count:
        raise XyzParseError(1, f"atom count says {count} but {len(records)} records follow")

    labels, coords = [], []
    for line_no, line in records:
        fields = line.split()
        if len(fields) != 4:
            raise XyzParseError(line_no, f"expected 'label x y z', got {len(fields)} fields")
        try:
            label = int(fields[0])
        except ValueError:
            raise XyzParseError(line_no, f"label {fields[0]!r} is not an integer")
        try:
            xyz = [float(v) for v in fields[1:]]
        except ValueError:
            raise XyzParseError(line_no, "coordinates must be decimal numbers")
        if label < 0:
            raise XyzParseError(line_no, "labels must be non-negative")
        if not all(math.isfinite(v) for v in xyz):
            raise XyzParseError(line_no, "non-finite coordinate")
        labels.append(label)
        coords.append(xyz)

    try:
        return build_point_cloud(coords, labels)
    except InvalidPointCloudError as e:
        raise XyzParseError(records[0][0], str(e))


def write_xyz(pc: PointCloud, comment: str = "") -> str:
    digits = config.XYZ_FLOAT_DIGITS
    lines = [str(pc.n), comment.replace("\n", " ")]
    for label, (x, y, z) in zip(pc.labels, pc.coords.tolist()):
        lines.append(f"{label} {x:.{digits}g} {y:.{digits}g} {z:.{digits}g}")
    return "\n".join(lines) + "\n"


def read_xyz_file(path: str) -> PointCloud:
    with open(path, encoding="utf-8") as f:
        return parse_xyz(f.read())


def write_xyz_file(path: str, pc: PointCloud, comment: str = ""):
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_xyz(pc, comment))


# --- 쌍 디렉터리 ---

def pair_metadata(pair: CounterexamplePair) -> dict:
    return {
        "schema_version": config.SCHEMA_VERSION,
        "family": pair.family,
        "params": pair.params,
        "expected_kinds": list(pair.expected_kinds) if pair.expected_kinds is not None else None,
        "expected_kind_count": pair.expected_kind_count,
        "note": pair.note,
    }


def write_pair(pair: CounterexamplePair, out_dir: str) -> List[str]:
    """left.xyz, right.xyz, params.json 생성 후 경로 목록 반환"""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in (LEFT_FILE, RIGHT_FILE, PARAMS_FILE)]
    write_xyz_file(paths[0], pair.left, f"{pair.family} left")
    write_xyz_file(paths[1], pair.right, f"{pair.family} right")
    with open(paths[2], "w", encoding="utf-8") as f:
        json.dump(pair_metadata(pair), f, sort_keys=True, indent=2)
        f.write("\n")
    logger.info(f"💾 {pair.family} 쌍 저장: {out_dir}")
    return paths


def load_pair_dir(path: str) -> Tuple[bool, Union[CounterexamplePair, str]]:
    """(성공 여부, 쌍 또는 오류 메시지)"""
    left_path, right_path = os.path.join(path, LEFT_FILE), os.path.join(path, RIGHT_FILE)
    if not (os.path.isfile(left_path) and os.path.isfile(right_path)):
        return False, f"{path}: missing {LEFT_FILE} or {RIGHT_FILE}"
    try:
        left, right = read_xyz_file(left_path), read_xyz_file(right_path)
    except XyzParseError as e:
        return False, f"{path}: {e}"
    except UnicodeDecodeError as e:
        return False, f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})"
    except OSError as e:
        return False, f"{path}: {e.strerror or e}"

    meta = {}
    params_path = os.path.join(path, PARAMS_FILE)
    if os.path.isfile(params_path):
        try:
            with open(params_path, encoding="utf-8") as f:
                meta = json.load(f)
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            logger.warning(f"⚠️ {params_path} 읽기 실패, 메타데이터 없이 진행: {e}")
    if not isinstance(meta, dict):
        logger.warning(f"⚠️ {params_path} 는 JSON 객체가 아닙니다. 무시")
        meta = {}

    expected = meta.get("expected_kinds")
    return True, CounterexamplePair(
        left=left,
        right=right,
        family=meta.get("family", os.path.basename(os.path.normpath(path))),
        params=meta.get("params", {}),
        expected_kinds=tuple(expected) if expected is not None else None,
        expected_kind_count=meta.get("expected_kind_count"),
        note=meta.get("note", ""),
    )


def load_corpus(corpus_dir: str) -> Tuple[List[Tuple[str, CounterexamplePair]], List[str]]:
    """corpus_dir 자신과 하위 디렉터리에서 쌍을 모두 읽는다. (쌍 목록, 오류 목록)"""
    candidates = [corpus_dir] + sorted(
        os.path.join(corpus_dir, name)
        for name in os.listdir(corpus_dir)
        if os.path.isdir(os.path.join(corpus_dir, name))
    )
    pairs, errors = [], []
    for path in candidates:
        if not os.path.isfile(os.path.join(path, LEFT_FILE)) and path == corpus_dir:
            continue
        success, result = load_pair_dir(path)
        if success:
            pairs.append((os.path.relpath(path, corpus_dir), result))
        else:
            logger.warning(f"⚠️ 코퍼스 항목 건너뜀: {result}")
            errors.append(result)
    return pairs, errors
