# handlers/refinement.py
"""WL 계열 정제 서브커맨드: distinguish / refine / bench"""
import logging
import time
from typing import List

import click

from core import config
from handlers.common import (ROUNDS, emit, exit_with, load_cloud, method_option, output_options,
                             threads_from, tol_option)
from handlers.decorators import handle_errors, timed
from services import suites
from services.wl_engine import UNTIL_STABLE, RefinementConfig, distinguish as distinguish_clouds, refine as refine_cloud
from utils import formatters
from utils.formatters import Report

logger = logging.getLogger(__name__)

DEFAULT_BENCH_STEP = 4


def parse_n_range(text: str) -> List[int]:
    """'8:24' (간격 4), '8:24:2', '12' 형식. 끝값 포함"""
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise click.BadParameter(f"{text!r} must look like start:stop[:step]", param_hint="--n-range")
    if len(parts) == 1:
        parts = [parts[0], parts[0]]
    if len(parts) == 2:
        parts.append(DEFAULT_BENCH_STEP)
    if len(parts) != 3:
        raise click.BadParameter(f"{text!r} must look like start:stop[:step]", param_hint="--n-range")
    start, stop, step = parts
    if start < 1 or stop < start or step < 1:
        raise click.BadParameter(f"{text!r} is not an increasing positive range", param_hint="--n-range")
    return list(range(start, stop + 1, step))


def max_tuples_option(func):
    return click.option("--max-tuples", type=click.IntRange(min=1), default=config.MAX_TUPLES, show_default=True,
                        help="memory guard on n^k")(func)


@click.command("distinguish")
@click.option("--left", "left_path", required=True, type=click.Path())
@click.option("--right", "right_path", required=True, type=click.Path())
@method_option
@click.option("--k", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--rounds", type=ROUNDS, default=UNTIL_STABLE, show_default=True)
@click.option("--expect", type=click.Choice(["distinguished", "indistinguishable"]), default=None,
              help="exit 1 unless the verdict matches")
@max_tuples_option
@tol_option
@output_options
@click.pass_context
@handle_errors
@timed
def distinguish(ctx, left_path, right_path, method, k, rounds, expect, max_tuples, tau, fmt, out_path, timings):
    """두 점군을 공동 정제해 색 히스토그램이 갈리는지 판정"""
    cfg = RefinementConfig(method, k=k, rounds=rounds, tau=tau, max_tuples=max_tuples, threads=threads_from(ctx))
    left, right = load_cloud(left_path), load_cloud(right_path)
    started = time.perf_counter()
    verdict = distinguish_clouds(left, right, cfg)
    elapsed = (time.perf_counter() - started) * 1000.0

    expectations = {} if expect is None else {"wl_distinguished": expect == "distinguished"}
    report = Report(
        command="distinguish",
        params={"left": left_path, "right": right_path},
        method=method,
        k=verdict.k,
        rounds=rounds,
        tau=tau,
        verdicts={"wl_distinguished": verdict.distinguished},
        expectations=expectations,
        separation_round=verdict.separation_round,
        details={"rounds_run": verdict.rounds_run},
        timings_ms=[elapsed],
    )
    emit(report, fmt, out_path, timings)
    exit_with(report.passed)


@click.command("refine")
@click.option("--input", "input_path", required=True, type=click.Path())
@method_option
@click.option("--k", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--rounds", type=ROUNDS, default=UNTIL_STABLE, show_default=True)
@max_tuples_option
@tol_option
@output_options
@click.pass_context
@handle_errors
@timed
def refine(ctx, input_path, method, k, rounds, max_tuples, tau, fmt, out_path, timings):
    """한 점군의 라운드별 색 클래스 수와 최종 노드 분할"""
    cfg = RefinementConfig(method, k=k, rounds=rounds, tau=tau, max_tuples=max_tuples, threads=threads_from(ctx))
    result = refine_cloud(load_cloud(input_path), cfg)
    partition = result.node_partition()
    logger.info(f"🎨 {cfg.label}: {len(partition)} node classes after {result.rounds_run} rounds")
    emit(Report(
        command="refine",
        params={"input": input_path},
        method=method,
        k=cfg.order,
        rounds=rounds,
        tau=tau,
        kind_histogram=list(result.kinds),
        details={
            "per_round_class_counts": list(result.per_round_class_counts),
            "stable_round": result.stable_round,
            "rounds_run": result.rounds_run,
            "node_partition": partition,
        },
        timings_ms=list(result.round_timings_ms),
    ), fmt, out_path, timings)


@click.command("bench")
@method_option
@click.option("--n-range", "n_range", default="8:24", show_default=True, help="start:stop[:step], inclusive")
@click.option("--k", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--rounds", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@tol_option
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True)
@click.pass_context
@handle_errors
@timed
def bench(ctx, method, n_range, k, rounds, seed, tau, fmt):
    """임의 점군 쌍의 라운드별 정제 시간 표"""
    n_values = parse_n_range(n_range)
    headers, rows = suites.run_bench(method, n_values, k=k, rounds=rounds, seed=seed,
                                     threads=threads_from(ctx), tau=tau)
    if fmt == "text":
        click.echo(formatters.render_table(headers, rows))
        return
    emit(Report(
        command="bench",
        method=method,
        k=k,
        rounds=rounds,
        tau=tau,
        seed=seed,
        details={"headers": headers, "rows": rows},
    ), fmt, include_timings=True)
