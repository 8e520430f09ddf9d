# handlers/common.py
import logging
import os
from typing import Optional, Sequence, Union

import click

from core import config
from handlers.decorators import EXIT_VERIFICATION_FAILED
from services import xyz_service
from services.geometry import PointCloud
from services.wl_engine import METHODS, UNTIL_STABLE
from utils import formatters
from utils.formatters import Report

logger = logging.getLogger(__name__)


class RoundsType(click.ParamType):
    """음이 아닌 정수 또는 'until-stable'"""
    name = "rounds"

    def convert(self, value, param, ctx):
        if isinstance(value, int) or value == UNTIL_STABLE:
            return value
        try:
            rounds = int(value)
        except (TypeError, ValueError):
            self.fail(f"{value!r} is neither an integer nor {UNTIL_STABLE!r}", param, ctx)
        if rounds < 0:
            self.fail("rounds must be non-negative", param, ctx)
        return rounds


ROUNDS = RoundsType()


# --- 공통 옵션 ---

def tol_option(func):
    return click.option("--tol", "tau", type=float, default=config.DEFAULT_TAU, show_default=True,
                        help="distance quantization tolerance τ")(func)


def method_option(func):
    return click.option("--method", type=click.Choice(METHODS), required=True,
                        help="refinement method")(func)


def output_options(func):
    func = click.option("--timings", is_flag=True, help="include wall-clock timings in the report")(func)
    func = click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
                        help="write the report to a file instead of stdout")(func)
    func = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
                        show_default=True)(func)
    return func


# --- 입출력 ---

def load_cloud(path: str) -> PointCloud:
    if not os.path.isfile(path):
        raise click.BadParameter(f"{path} does not exist")
    return xyz_service.read_xyz_file(path)


def emit(reports: Union[Report, Sequence[Report]], fmt: str, out_path: Optional[str] = None,
         include_timings: bool = False):
    """리포트를 stdout 또는 파일로 출력"""
    text = formatters.render(reports, fmt, include_timings)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"📝 리포트 저장: {out_path}")
    else:
        click.echo(text, nl=False)


def exit_with(passed: bool):
    """검증 실패면 종료 코드 1"""
    if not passed:
        raise SystemExit(EXIT_VERIFICATION_FAILED)


def threads_from(ctx: click.Context) -> int:
    obj = ctx.find_root().obj or {}
    return int(obj.get("threads", config.THREADS))
