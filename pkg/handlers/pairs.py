# handlers/pairs.py
"""반례 쌍 생성 / 합동 판정 / 패밀리 검증 서브커맨드"""
import logging
from typing import List, Optional

import click

from handlers.common import emit, exit_with, load_cloud, output_options, threads_from, tol_option
from handlers.decorators import handle_errors, timed
from services import counterexamples as cx
from services import suites, xyz_service
from services.counterexamples import CounterexamplePair, VerificationReport
from services.geometry import congruent_bruteforce
from services.wl_engine import UNTIL_STABLE
from utils.formatters import Report

logger = logging.getLogger(__name__)


def build_pair(family: str, a: float, b: float, variant: str, layers: str, base: str,
               tau: float) -> CounterexamplePair:
    if family in cx.A1_FAMILIES:
        return cx.a1_pair(family, tau)
    if family == "cubeocta":
        return cx.cube_octahedron_pair(a, b, variant)
    if family == "twocubes":
        return cx.two_cubes_pair(a, b, tau)
    return cx.augment_pair(cx.a1_pair(base, tau), cx.parse_layer_specs(layers), tau)


def verification_report(rep: VerificationReport, tau: float, seed: Optional[int] = None) -> Report:
    return Report(
        command="verify-family",
        family=rep.family,
        params=rep.params,
        method="wl1e",
        k=1,
        rounds=UNTIL_STABLE,
        tau=tau,
        verdicts={"oracle_congruent": rep.oracle.congruent, "wl_distinguished": rep.wl.distinguished},
        expectations={"oracle_congruent": False, "wl_distinguished": False},
        separation_round=rep.wl.separation_round,
        kind_histogram=list(rep.kinds),
        expected_kinds=list(rep.expected_kinds) if rep.expected_kinds is not None else None,
        expected_kind_count=rep.expected_kind_count,
        seed=seed,
        details={
            "kinds_right": list(rep.kinds_right),
            "max_residual": rep.oracle.max_residual,
            "reasons": list(rep.reasons),
            "note": rep.note,
        },
    )


def stable_state_holds(pair: CounterexamplePair, tau: float) -> bool:
    """전체 다면체 + (𝓛_ori ∪ 𝓛_com) 라벨이 1-WL-E 안정 상태인지"""
    pair_all = cx.full_polyhedron_pair(pair, tau)
    (l_ori, l_com), (r_ori, r_com) = cx.complementary_labels(pair, tau)
    return cx.verify_stable_state(pair_all, (l_ori.merged(l_com), r_ori.merged(r_com)), tau)


@click.command("generate")
@click.option("--family", type=click.Choice(suites.FAMILIES), required=True)
@click.option("--a", "a", type=float, default=1.0, show_default=True,
              help="cube half-edge (cubeocta) or first cube half-edge (twocubes)")
@click.option("--b", "b", type=float, default=2.0, show_default=True,
              help="octahedron vertex distance (cubeocta) or second cube half-edge (twocubes)")
@click.option("--variant", type=click.Choice(["red", "blue"]), default="red", show_default=True)
@click.option("--layers", default="ori:1.0,all:2.0,com:3.0", show_default=True, help="aug layers type:radius,...")
@click.option("--base", type=click.Choice(tuple(cx.A1_FAMILIES)), default="fig2", show_default=True,
              help="aug base family")
@tol_option
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
@handle_errors
@timed
def generate(family, a, b, variant, layers, base, tau, out_dir, fmt):
    """반례 쌍을 left.xyz / right.xyz / params.json 으로 저장"""
    pair = build_pair(family, a, b, variant, layers, base, tau)
    paths = xyz_service.write_pair(pair, out_dir)
    emit(Report(
        command="generate",
        family=pair.family,
        params=pair.params,
        tau=tau,
        expected_kinds=list(pair.expected_kinds) if pair.expected_kinds is not None else None,
        expected_kind_count=pair.expected_kind_count,
        details={"files": paths, "n_left": pair.left.n, "n_right": pair.right.n, "note": pair.note},
    ), fmt)


@click.command("congruent")
@click.option("--left", "left_path", required=True, type=click.Path())
@click.option("--right", "right_path", required=True, type=click.Path())
@click.option("--expect", type=click.Choice(["congruent", "non-congruent"]), default=None,
              help="exit 1 unless the verdict matches")
@tol_option
@output_options
@click.pass_context
@handle_errors
@timed
def congruent(ctx, left_path, right_path, expect, tau, fmt, out_path, timings):
    """라벨 보존 E(3) 합동 판정 (완전 탐색 오라클)"""
    left, right = load_cloud(left_path), load_cloud(right_path)
    verdict = congruent_bruteforce(left, right, tau, threads=threads_from(ctx))
    expectations = {} if expect is None else {"oracle_congruent": expect == "congruent"}
    report = Report(
        command="congruent",
        params={"left": left_path, "right": right_path},
        tau=tau,
        verdicts={"oracle_congruent": verdict.congruent},
        expectations=expectations,
        details={
            "witness_permutation": list(verdict.witness_permutation) if verdict.witness_permutation is not None else None,
            "max_residual": verdict.max_residual,
        },
    )
    emit(report, fmt, out_path, timings)
    exit_with(report.passed)


@click.command("verify-family")
@click.option("--family", type=click.Choice(suites.FAMILIES), required=True)
@click.option("--samples", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--variant", type=click.Choice(["red", "blue"]), default=None, help="cubeocta variant (default: both)")
@click.option("--base", type=click.Choice(tuple(cx.A1_FAMILIES)), default=None, help="aug base (default: cycle)")
@tol_option
@output_options
@click.pass_context
@handle_errors
@timed
def verify_family(ctx, family, samples, seed, variant, base, tau, fmt, out_path, timings):
    """패밀리 매개변수를 샘플링해 반례 성질 일괄 검증. 하나라도 실패하면 종료 코드 1"""
    threads = threads_from(ctx)
    pairs = suites.sample_pairs(family, samples, seed, variant=variant, base=base, tau=tau)
    reports: List[Report] = []
    for pair in pairs:
        report = verification_report(cx.verify_counterexample(pair, tau, threads=threads), tau, seed)
        if pair.family in cx.A1_FAMILIES:
            ok = stable_state_holds(pair, tau)
            if not ok:
                logger.error(f"❌ {pair.family}: (G_all, 𝓛_ori ∪ 𝓛_com) 가 안정 상태가 아님")
            report.verdicts["stable_state"] = ok
            report.expectations["stable_state"] = True
        reports.append(report)

    failed = sum(1 for r in reports if not r.passed)
    if failed:
        logger.error(f"❌ {family}: {failed}/{len(reports)} 쌍 검증 실패")
    else:
        logger.info(f"✅ {family}: {len(reports)} 쌍 검증 통과")
    emit(reports, fmt, out_path, timings)
    exit_with(failed == 0)
