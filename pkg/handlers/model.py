# handlers/model.py
import logging
import time

import click

from core import config
from handlers.common import emit, load_cloud, output_options, threads_from
from handlers.decorators import handle_errors, timed
from services.disgnn import ACTIVATIONS, DISCRETE_ANALOG, VARIANTS, ModelConfig, forward as run_forward
from utils.formatters import Report

logger = logging.getLogger(__name__)


@click.command("forward")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--variant", type=click.Choice(VARIANTS), default="plain", show_default=True)
@click.option("--k", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--rounds", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--hidden-dim", type=click.IntRange(min=1), default=config.HIDDEN_DIM, show_default=True)
@click.option("--rbf-dim", type=click.IntRange(min=1), default=config.RBF_DIM, show_default=True)
@click.option("--activation", type=click.Choice(ACTIVATIONS), default="silu", show_default=True)
@click.option("--reference", is_flag=True, help="use the per-tuple reference path instead of the fast path (f)")
@output_options
@click.pass_context
@handle_errors
@timed
def forward(ctx, input_path, variant, k, rounds, seed, hidden_dim, rbf_dim, activation, reference,
            fmt, out_path, timings):
    """k-DisGNN 순전파 (무작위 가중치): 스칼라 출력과 등변 벡터"""
    cfg = ModelConfig(variant=variant, k=k, rounds=rounds, hidden_dim=hidden_dim, rbf_dim=rbf_dim,
                      seed=seed, activation=activation, fast_path=not reference)
    pc = load_cloud(input_path)
    started = time.perf_counter()
    out = run_forward(pc, cfg, threads=threads_from(ctx))
    elapsed = (time.perf_counter() - started) * 1000.0
    logger.debug(f"forward {variant} n={pc.n}: {elapsed:.1f} ms")

    emit(Report(
        command="forward",
        params={"input": input_path, "variant": variant, "hidden_dim": hidden_dim, "rbf_dim": rbf_dim,
                "activation": activation, "fast_path": cfg.fast_path},
        method=DISCRETE_ANALOG[variant],
        k=cfg.order,
        rounds=rounds,
        seed=seed,
        details={
            "n": pc.n,
            "scalar": out.scalar,
            "equivariant": [float(v) for v in out.equivariant],
        },
        timings_ms=[elapsed],
    ), fmt, out_path, timings)
