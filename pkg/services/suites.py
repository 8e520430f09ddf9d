# services/suites.py
"""
패밀리 샘플링, 코퍼스 성질 스위트(soundness / hierarchy / separation / consistency), 마이크로 벤치마크
"""
import asyncio
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from core import config
from core.errors import MemoryGuardError
from services import counterexamples as cx
from services.counterexamples import CounterexamplePair, LayerSpec
from services.disgnn import DISCRETE_ANALOG, ModelConfig, forward
from services.geometry import PointCloud, apply_e3, build_point_cloud, random_e3, random_permutation
from services.wl_engine import UNTIL_STABLE, RefinementConfig, distance_graphs, distinguish, refine_joint

logger = logging.getLogger(__name__)

SUITES = ("soundness", "hierarchy", "separation", "consistency")
SAMPLED_FAMILIES = ("cubeocta", "twocubes", "aug")
FAMILIES = tuple(cx.A1_FAMILIES) + SAMPLED_FAMILIES

# soundness / hierarchy 에서 고차 방법을 돌릴 최대 튜플 수
SUITE_TUPLE_CAP = 250_000

SOUNDNESS_METHODS = (
    ("wl1e", 1, UNTIL_STABLE),
    ("kfwl", 2, 3),
    ("kewl", 2, 3),
    ("kwl", 3, 1),
)

# 완전성 예산: (이름, 방법, k, 라운드)
SEPARATION_BUDGETS = (
    ("2-FWL x3", "kfwl", 2, 3),
    ("2-E-WL x3", "kewl", 2, 3),
    ("3-FWL x1", "kfwl", 3, 1),
    ("3-E-WL x1", "kewl", 3, 1),
    ("4-WL x1", "kwl", 4, 1),
)

CONSISTENCY_VARIANTS = ("vanilla", "plain", "f", "e")
CONSISTENCY_ROUNDS = 3
CONSISTENCY_SEEDS = 5
SCALAR_TOLERANCE = 1e-6


@dataclass
class CaseOutcome:
    """스위트의 한 항목 결과"""
    name: str
    checks: int = 0
    failures: List[str] = field(default_factory=list)
    findings: List[str] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    row: list = field(default_factory=list)


@dataclass
class SuiteResult:
    suite: str
    headers: List[str]
    outcomes: List[CaseOutcome]
    load_errors: List[str] = field(default_factory=list)
    elapsed_ms: float = 0.0

    @property
    def checks(self) -> int:
        return sum(o.checks for o in self.outcomes)

    @property
    def failures(self) -> List[str]:
        return [f"{o.name}: {f}" for o in self.outcomes for f in o.failures]

    @property
    def findings(self) -> List[str]:
        return [f"{o.name}: {f}" for o in self.outcomes for f in o.findings]

    @property
    def skipped(self) -> List[str]:
        return [f"{o.name}: {s}" for o in self.outcomes for s in o.skipped]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.load_errors


# --- 샘플링 ---

def random_cloud(n: int, seed: int, scale: float = 1.0) -> PointCloud:
    rng = np.random.default_rng(seed)
    return build_point_cloud(rng.uniform(-scale, scale, size=(n, 3)))


def random_aug_spec(rng: np.random.Generator, max_layers: int = 4) -> List[LayerSpec]:
    """k ≤ max_layers 층, 반지름 [0.5, 5] 에서 서로 다르게, ori/com 층 최소 1개"""
    count = int(rng.integers(1, max_layers + 1))
    radii: List[float] = []
    while len(radii) < count:
        r = float(rng.uniform(0.5, 5.0))
        if all(abs(r - other) > 1e-3 for other in radii):
            radii.append(r)
    types = [str(rng.choice(cx.LAYER_TYPES)) for _ in range(count)]
    if all(t == "all" for t in types):
        types[int(rng.integers(count))] = str(rng.choice(("ori", "com")))
    return [LayerSpec(t, r) for t, r in zip(types, radii)]


def sample_pairs(family: str, samples: int = 20, seed: int = 0, variant: Optional[str] = None,
                 base: Optional[str] = None, tau: float = config.DEFAULT_TAU) -> List[CounterexamplePair]:
    """정다면체 패밀리는 고정된 한 쌍, 나머지는 seed 로 매개변수 샘플링"""
    if family in cx.A1_FAMILIES:
        return [cx.a1_pair(family, tau)]
    if family not in SAMPLED_FAMILIES:
        raise ValueError(f"unknown family {family!r}")

    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(samples):
        if family == "cubeocta":
            v = variant or ("red", "blue")[i % 2]
            a, b = rng.uniform(0.5, 2.0, size=2)
            pairs.append(cx.cube_octahedron_pair(float(a), float(b), v))
        elif family == "twocubes":
            a1 = float(rng.uniform(0.5, 2.0))
            a2 = a1 if i % 2 == 0 else float(rng.uniform(0.5, 2.0))
            pairs.append(cx.two_cubes_pair(a1, a2, tau=tau))
        else:
            base_family = base or tuple(cx.A1_FAMILIES)[i % len(cx.A1_FAMILIES)]
            pairs.append(cx.augment_pair(cx.a1_pair(base_family, tau), random_aug_spec(rng), tau))
    return pairs


def default_corpus(seed: int = 0, samples: int = 2, tau: float = config.DEFAULT_TAU) -> List[Tuple[str, CounterexamplePair]]:
    """정다면체 쌍 전체 + 매개변수 패밀리 몇 개 + AUG 몇 개"""
    corpus = [(family, cx.a1_pair(family, tau)) for family in cx.A1_FAMILIES]
    for family in SAMPLED_FAMILIES:
        for i, pair in enumerate(sample_pairs(family, samples, seed, tau=tau)):
            corpus.append((f"{family}-{i:02d}", pair))
    return corpus


# --- 스위트별 항목 검사 ---

def _relative_gap(x: float, y: float) -> float:
    return abs(x - y) / (1.0 + max(abs(x), abs(y)))


def _soundness_case(name: str, cloud: PointCloud, method: str, k: int, rounds, seed: int, tau: float) -> CaseOutcome:
    out = CaseOutcome(name=name)
    cfg = RefinementConfig(method, k=k, rounds=rounds, tau=tau, max_tuples=SUITE_TUPLE_CAP)
    moved = apply_e3(cloud.permuted(random_permutation(cloud.n, seed)), random_e3(seed))
    try:
        verdict = distinguish(cloud, moved, cfg)
    except MemoryGuardError as e:
        out.skipped.append(str(e))
        out.row = [name, cfg.label, seed, "skipped"]
        return out
    out.checks = 1
    if verdict.distinguished:
        out.failures.append(f"{cfg.label} separated a cloud from its E(3) image (seed {seed})")
    out.row = [name, cfg.label, seed, "distinguished" if verdict.distinguished else "ok"]
    return out


def _hierarchy_case(name: str, pair: CounterexamplePair, tau: float) -> CaseOutcome:
    out = CaseOutcome(name=name)
    a, b = pair.left, pair.right
    wl1e = distinguish(a, b, RefinementConfig("wl1e", tau=tau))
    fwl2 = distinguish(a, b, RefinementConfig("kfwl", k=2, tau=tau))
    fwl2_r = distinguish(a, b, RefinementConfig("kfwl", k=2, rounds=3, tau=tau))
    ewl2_r = distinguish(a, b, RefinementConfig("kewl", k=2, rounds=3, tau=tau))

    out.checks += 1
    if wl1e.distinguished and not fwl2.distinguished:
        out.failures.append("1-WL-E separates but 2-FWL does not")
    for r in range(CONSISTENCY_ROUNDS + 1):
        out.checks += 1
        f_sep = fwl2_r.separation_round is not None and fwl2_r.separation_round <= r
        e_sep = ewl2_r.separation_round is not None and ewl2_r.separation_round <= r
        if f_sep and not e_sep:
            out.failures.append(f"2-FWL separates within {r} rounds but 2-E-WL does not")

    fwl3_text = "skipped"
    try:
        fwl3 = distinguish(a, b, RefinementConfig("kfwl", k=3, tau=tau, max_tuples=SUITE_TUPLE_CAP))
        out.checks += 1
        fwl3_text = str(fwl3.distinguished)
        if fwl2.distinguished and not fwl3.distinguished:
            out.failures.append("2-FWL separates but 3-FWL does not")
    except MemoryGuardError as e:
        out.skipped.append(str(e))

    out.row = [name, a.n, wl1e.distinguished, fwl2.distinguished, fwl2_r.separation_round,
               ewl2_r.separation_round, fwl3_text]
    return out


def _separation_case(name: str, pair: CounterexamplePair, tau: float, max_tuples: int) -> CaseOutcome:
    out = CaseOutcome(name=name)
    row = [name, pair.left.n]
    for label, method, k, rounds in SEPARATION_BUDGETS:
        cfg = RefinementConfig(method, k=k, rounds=rounds, tau=tau, max_tuples=max_tuples)
        try:
            verdict = distinguish(pair.left, pair.right, cfg)
        except MemoryGuardError as e:
            out.skipped.append(f"{label}: {e}")
            row.append("skipped")
            continue
        out.checks += 1
        row.append("yes" if verdict.distinguished else "NO")
        if not verdict.distinguished:
            logger.warning(f"⚠️ {name}: {label} 예산으로 구분 실패")
            out.failures.append(f"{label} did not distinguish the pair")
    out.row = row
    return out


def _consistency_case(name: str, pair: CounterexamplePair, tau: float, seeds: int) -> CaseOutcome:
    out = CaseOutcome(name=name)
    row = [name, pair.left.n]
    for variant in CONSISTENCY_VARIANTS:
        discrete = RefinementConfig(DISCRETE_ANALOG[variant], k=2, rounds=CONSISTENCY_ROUNDS, tau=tau)
        separated = distinguish(pair.left, pair.right, discrete).distinguished
        gaps = []
        for seed in range(seeds):
            cfg = ModelConfig(variant=variant, k=2, rounds=CONSISTENCY_ROUNDS, seed=seed)
            gaps.append(_relative_gap(forward(pair.left, cfg).scalar, forward(pair.right, cfg).scalar))
        out.checks += 1
        if not separated:
            bad = [s for s, g in enumerate(gaps) if g > SCALAR_TOLERANCE]
            if bad:
                out.failures.append(f"{variant}: discrete analog ties but scalars differ for seeds {bad}")
            row.append("tie")
        else:
            hits = [s for s, g in enumerate(gaps) if g > SCALAR_TOLERANCE]
            if variant == "f" and len(hits) < max(1, seeds - 1):
                misses = [s for s in range(seeds) if s not in hits]
                out.failures.append(f"f-variant separated only {len(hits)}/{seeds} seeds (missed {misses})")
                logger.error(f"❌ {name}: f-variant 분리 seed {len(hits)}/{seeds}, 실패 seed {misses}")
            elif variant != "f" and len(hits) < seeds:
                # f 이외 변형의 부족분은 기록만
                out.findings.append(f"{variant}: separated {len(hits)}/{seeds} seeds")
            row.append(f"{len(hits)}/{seeds}")
    out.row = row
    return out


# --- 실행기 ---

async def _gather(jobs: Sequence[Tuple[Callable, tuple]], threads: int, desc: str, progress: bool) -> List[CaseOutcome]:
    semaphore = asyncio.Semaphore(max(1, threads))
    bar = tqdm(total=len(jobs), desc=desc, disable=not progress, leave=False)

    async def run(fn, args):
        async with semaphore:
            result = await asyncio.to_thread(fn, *args)
        bar.update(1)
        return result

    try:
        return await asyncio.gather(*(run(fn, args) for fn, args in jobs))
    finally:
        bar.close()


def _soundness_jobs(pairs, samples: int, seed: int, tau: float):
    clouds = []
    for name, pair in pairs:
        clouds += [(f"{name}/left", pair.left), (f"{name}/right", pair.right)]
    jobs = []
    for i in range(samples):
        cloud_name, cloud = clouds[i % len(clouds)]
        method, k, rounds = SOUNDNESS_METHODS[i % len(SOUNDNESS_METHODS)]
        jobs.append((_soundness_case, (cloud_name, cloud, method, k, rounds, seed * 100_003 + i, tau)))
    return jobs


def run_suite(suite: str, pairs: Sequence[Tuple[str, CounterexamplePair]], threads: int = 1, seed: int = 0,
              samples: int = 200, random_pairs: int = 50, tau: float = config.DEFAULT_TAU,
              max_tuples: int = config.MAX_TUPLES, seeds: int = CONSISTENCY_SEEDS,
              progress: bool = False) -> SuiteResult:
    """코퍼스 쌍 전체에 스위트 실행. 항목은 스레드로 병렬 실행되지만 결과 순서는 입력 순서."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    if not pairs:
        raise ValueError("corpus is empty")

    if suite == "soundness":
        headers = ["cloud", "method", "seed", "result"]
        jobs = _soundness_jobs(pairs, samples, seed, tau)
    elif suite == "hierarchy":
        headers = ["pair", "n", "1-WL-E", "2-FWL", "2-FWL sep", "2-E-WL sep", "3-FWL"]
        extra = [(f"random-{i:02d}", CounterexamplePair(left=random_cloud(8, seed * 7919 + 2 * i),
                                                        right=random_cloud(8, seed * 7919 + 2 * i + 1),
                                                        family="random"))
                 for i in range(random_pairs)]
        jobs = [(_hierarchy_case, (name, pair, tau)) for name, pair in list(pairs) + extra]
    elif suite == "separation":
        headers = ["pair", "n"] + [b[0] for b in SEPARATION_BUDGETS]
        jobs = [(_separation_case, (name, pair, tau, max_tuples)) for name, pair in pairs]
    else:
        headers = ["pair", "n"] + list(CONSISTENCY_VARIANTS)
        jobs = [(_consistency_case, (name, pair, tau, seeds)) for name, pair in pairs]

    started = time.perf_counter()
    outcomes = asyncio.run(_gather(jobs, threads, suite, progress))
    result = SuiteResult(suite=suite, headers=headers, outcomes=list(outcomes),
                         elapsed_ms=(time.perf_counter() - started) * 1000.0)
    if result.passed:
        logger.info(f"✅ {suite}: {result.checks} checks passed ({len(result.skipped)} skipped)")
    else:
        logger.error(f"❌ {suite}: {len(result.failures)} failures")
    return result


# --- 벤치마크 ---

def run_bench(method: str, n_values: Sequence[int], k: int = 2, rounds: int = 3, seed: int = 0,
              threads: int = 1, tau: float = config.DEFAULT_TAU) -> Tuple[List[str], List[list]]:
    """임의 점군 한 쌍에 대해 라운드별 실행 시간(ms) 표"""
    headers = ["n", "tuples"] + [f"round {t}" for t in range(rounds + 1)] + ["total"]
    rows = []
    for n in n_values:
        cfg = RefinementConfig(method, k=k, rounds=rounds, tau=tau, threads=threads)
        graphs = distance_graphs([random_cloud(n, seed + n), random_cloud(n, seed + n + 1)], tau)
        results = refine_joint(graphs, cfg)
        timings = list(results[0].round_timings_ms)
        cells = [f"{ms:.2f}" for ms in timings] + ["-"] * (rounds + 1 - len(timings))
        rows.append([n, n ** cfg.order] + cells + [f"{sum(timings):.2f}"])
        logger.debug(f"bench {cfg.label} n={n}: {sum(timings):.2f} ms")
    return headers, rows
