# utils/formatters.py
import json
import math
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field
from tabulate import tabulate

from core import config


class Report(BaseModel):
    """CLI 리포트 스키마. pass 는 다른 필드만으로 결정된다."""
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = config.SCHEMA_VERSION
    command: str
    family: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    method: Optional[str] = None
    k: Optional[int] = None
    rounds: Optional[Union[int, str]] = None
    tau: Optional[float] = None
    verdicts: Dict[str, Optional[bool]] = Field(default_factory=dict)
    expectations: Dict[str, bool] = Field(default_factory=dict)
    separation_round: Optional[int] = None
    kind_histogram: Optional[List[int]] = None
    expected_kinds: Optional[List[int]] = None
    expected_kind_count: Optional[int] = None
    seed: Optional[int] = None
    details: Dict[str, Any] = Field(default_factory=dict)
    timings_ms: Optional[List[float]] = None

    @computed_field(alias="pass")
    @property
    def passed(self) -> bool:
        for key, wanted in self.expectations.items():
            if self.verdicts.get(key) is not wanted:
                return False
        if self.kind_histogram is not None:
            if self.expected_kinds is not None and list(self.kind_histogram) != list(self.expected_kinds):
                return False
            if self.expected_kind_count is not None and len(self.kind_histogram) != self.expected_kind_count:
                return False
        return True


def round_floats(value: Any, digits: int = config.REPORT_FLOAT_DIGITS) -> Any:
    """유효숫자 digits 자리로 반올림, inf/nan 은 None"""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: round_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, digits) for v in value]
    return value


def report_data(report: Report, include_timings: bool = False) -> dict:
    data = report.model_dump(by_alias=True, mode="python")
    if not include_timings or data.get("timings_ms") is None:
        data.pop("timings_ms", None)
    return round_floats(data)


def render_json(reports: Union[Report, Sequence[Report]], include_timings: bool = False) -> str:
    """키 정렬 + 고정 자릿수라서 같은 입력이면 바이트 단위로 같은 출력"""
    if isinstance(reports, Report):
        payload = report_data(reports, include_timings)
    else:
        payload = [report_data(r, include_timings) for r in reports]
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.{config.REPORT_FLOAT_DIGITS}g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if value is None:
        return "-"
    return str(value)


def render_text(report: Report, include_timings: bool = False) -> str:
    data = report_data(report, include_timings)
    status = "✅ PASS" if data["pass"] else "❌ FAIL"
    lines = [f"{status}  {data['command']}" + (f" ({data['family']})" if data.get("family") else "")]
    for key in ("method", "k", "rounds", "tau", "seed", "separation_round",
                "kind_histogram", "expected_kinds", "expected_kind_count"):
        if data.get(key) is not None:
            lines.append(f"  {key}: {_fmt(data[key])}")
    for key, value in sorted(data["verdicts"].items()):
        wanted = data["expectations"].get(key)
        suffix = f" (expected {wanted})" if wanted is not None else ""
        lines.append(f"  {key}: {_fmt(value)}{suffix}")
    for key, value in sorted(data["details"].items()):
        lines.append(f"  {key}: {_fmt(value)}")
    if data.get("timings_ms") is not None:
        lines.append(f"  timings_ms: {_fmt(data['timings_ms'])}")
    return "\n".join(lines) + "\n"


def render(reports: Union[Report, Sequence[Report]], fmt: str = "json", include_timings: bool = False) -> str:
    if fmt == "json":
        return render_json(reports, include_timings)
    if isinstance(reports, Report):
        return render_text(reports, include_timings)
    return "\n".join(render_text(r, include_timings) for r in reports)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    return tabulate(rows, headers=list(headers), tablefmt="github", stralign="right", numalign="right")


def partition_text(partition: List[List[int]]) -> str:
    return " | ".join("{" + ",".join(str(v) for v in block) + "}" for block in partition)
