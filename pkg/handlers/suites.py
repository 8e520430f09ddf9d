# handlers/suites.py
import logging
import os

import click

from core import config, database
from handlers.common import emit, exit_with, threads_from, tol_option
from handlers.decorators import handle_errors, timed
from services import suites, xyz_service
from utils import formatters
from utils.formatters import Report

logger = logging.getLogger(__name__)

GENERATED_CORPUS = "<generated>"


@click.command("corpus")
@click.option("--dir", "corpus_dir", type=click.Path(file_okay=False), default=None,
              help="directory of pair directories (default: generate the standard corpus in memory)")
@click.option("--suite", type=click.Choice(suites.SUITES), required=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=200, show_default=True,
              help="soundness: number of random E(3) images")
@click.option("--random-pairs", type=click.IntRange(min=0), default=50, show_default=True,
              help="hierarchy: extra random 8-point pairs")
@click.option("--seeds", type=click.IntRange(min=1), default=suites.CONSISTENCY_SEEDS, show_default=True,
              help="consistency: model seeds per variant")
@click.option("--max-tuples", type=click.IntRange(min=1), default=config.MAX_TUPLES, show_default=True)
@click.option("--progress", is_flag=True, help="show a progress bar on stderr")
@tol_option
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True)
@click.option("--timings", is_flag=True)
@click.pass_context
@handle_errors
@timed
def corpus(ctx, corpus_dir, suite, seed, samples, random_pairs, seeds, max_tuples, progress, tau, fmt, timings):
    """코퍼스 전체에 속성 스위트 실행. 실패가 하나라도 있으면 종료 코드 1"""
    if corpus_dir is None:
        pairs, load_errors = suites.default_corpus(seed, tau=tau), []
    else:
        if not os.path.isdir(corpus_dir):
            raise click.BadParameter(f"{corpus_dir} is not a directory", param_hint="--dir")
        pairs, load_errors = xyz_service.load_corpus(corpus_dir)

    result = suites.run_suite(suite, pairs, threads=threads_from(ctx), seed=seed, samples=samples,
                              random_pairs=random_pairs, tau=tau, max_tuples=max_tuples, seeds=seeds,
                              progress=progress)
    result.load_errors = list(load_errors)
    database.record_suite_run(suite, corpus_dir or GENERATED_CORPUS, len(pairs), len(result.failures))

    if fmt == "text":
        click.echo(formatters.render_table(result.headers, [o.row for o in result.outcomes]))
        status = "✅ PASS" if result.passed else "❌ FAIL"
        click.echo(f"\n{status}  {suite}: {len(pairs)} pairs, {result.checks} checks, "
                   f"{len(result.failures)} failures, {len(result.skipped)} skipped")
        for line in result.load_errors + result.failures:
            click.echo(f"  ❌ {line}")
        for line in result.findings:
            click.echo(f"  ⚠️ {line}")
        if timings:
            click.echo(f"  elapsed: {result.elapsed_ms:.1f} ms")
    else:
        emit(Report(
            command="corpus",
            params={"dir": corpus_dir or GENERATED_CORPUS, "suite": suite},
            tau=tau,
            seed=seed,
            verdicts={"suite_passed": result.passed},
            expectations={"suite_passed": True},
            details={
                "pairs": len(pairs),
                "checks": result.checks,
                "headers": result.headers,
                "rows": [o.row for o in result.outcomes],
                "failures": result.failures,
                "findings": result.findings,
                "skipped": result.skipped,
                "load_errors": result.load_errors,
            },
            timings_ms=[result.elapsed_ms],
        ), fmt, include_timings=timings)
    exit_with(result.passed)
