# cli.py
import logging

import click

from core import config, database
import handlers.model as h_model
import handlers.pairs as h_pairs
import handlers.refinement as h_refinement
import handlers.suites as h_suites

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


@click.group()
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default=None,
              help="overrides LOG_LEVEL from the environment")
@click.option("--threads", type=click.IntRange(min=1), default=config.THREADS, show_default=True,
              envvar="DISGNN_THREADS", help="worker cap for the engine and the oracle")
@click.pass_context
def cli(ctx, log_level, threads):
    """거리 기반 WL 계층 / 반례 패밀리 / k-DisGNN 검증 도구"""
    level = getattr(logging, log_level.upper()) if log_level else config.LOG_LEVEL
    # 로그는 stderr, stdout 은 리포트 전용
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=level,
        force=True,
    )
    database.init_db()
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads
    logger.debug(f"threads={threads}, data_dir={config.DATA_DIR}")


cli.add_command(h_pairs.generate)
cli.add_command(h_pairs.congruent)
cli.add_command(h_pairs.verify_family)
cli.add_command(h_refinement.distinguish)
cli.add_command(h_refinement.refine)
cli.add_command(h_refinement.bench)
cli.add_command(h_model.forward)
cli.add_command(h_suites.corpus)


if __name__ == "__main__":
    cli()
