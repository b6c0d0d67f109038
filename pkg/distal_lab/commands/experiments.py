"""Experiment runners behind the CLI subcommands."""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path
from typing import Awaitable, Callable, List, Optional, Sequence, TypeVar

import numpy as np

from ..models.config import BoxSpec, ExperimentConfig
from ..reports import Report, ReportError, read_csv, write_csv
from ..services.cocycles import GridCocycle, parse_cocycle
from ..services.diagnostics import birkhoff_score, family_for
from ..services.genericizer import (
    PerturbationError,
    PerturbationParams,
    PerturbationResult,
    perturb_relative,
    perturb_simple,
)
from ..services.groups import (
    HomogeneousSpace,
    Torus,
    format_element,
    parse_element,
    parse_group,
)
from ..services.lemmalab import lemma_tasks
from ..services.systems import (
    SQRT2,
    FiberSpec,
    HomogeneousExtension,
    System,
    make_skew_product,
    parse_system,
)
from ..services.towers import (
    CoverageUnattainable,
    build_tower,
    first_return,
    purify,
    return_time_profile,
)
from ..utils.intervals import Box, BoxSet, IntervalSet
from ..utils.seeding import task_rng

logger = logging.getLogger(__name__)

T = TypeVar("T")

NO_GROUP = ("", "none")


async def gather_limited(jobs: Sequence[Callable[[], T]], threads: int) -> List[T]:
    """Run blocking jobs on worker threads, at most ``threads`` at a time, in input order."""
    semaphore = asyncio.Semaphore(max(1, threads))

    async def run(job: Callable[[], T]) -> T:
        async with semaphore:
            return await asyncio.to_thread(job)

    return list(await asyncio.gather(*(run(job) for job in jobs)))


def _area(boxes: Optional[List[BoxSpec]], spans) -> Optional[BoxSet]:
    if not boxes:
        return None
    return BoxSet([Box(tuple(b.lo), tuple(b.hi)) for b in boxes], spans)


def build_system(config: ExperimentConfig) -> System:
    base = parse_system(config.system)
    if config.group.strip().lower() in NO_GROUP:
        return base
    group = parse_group(config.group)
    phi = parse_cocycle(config.cocycle, group)
    return make_skew_product(base, group, phi)


async def run_ergodicity(config: ExperimentConfig, threads: int) -> Report:
    params = config.ergodicity
    system = build_system(config)
    family = family_for(system, params.base_modes, params.fiber_limit)
    points = system.sample_points(task_rng(config.seed, 0), params.starts)
    jobs = [
        lambda n=n: birkhoff_score(
            system, family, n, params.starts, task_rng(config.seed, 0), points, params.threshold
        )
        for n in sorted(set(params.n))
    ]
    report = Report("ergodicity")
    for result in await gather_limited(jobs, threads):
        detected = result.detected_invariant
        for fid, start, n, score in result.rows():
            report.add((config.system, fid, start, n, score, bool(score > params.threshold)))
        if params.expect == "ergodic" and detected:
            logger.warning("n=%d: invariant function detected (max %.4g)", result.n, result.max_score)
            report.fail()
        if params.expect == "non-ergodic" and not detected:
            logger.warning("n=%d: no invariant function detected", result.n)
            report.fail()
    return report


def _simple_job(config: ExperimentConfig, index: int) -> Callable[[], Optional[PerturbationResult]]:
    params = config.perturb
    base = parse_system(config.system)
    group = parse_group(config.group)
    phi0 = parse_cocycle(config.cocycle, group)
    lab = PerturbationParams(
        target=parse_element(group, params.target),
        a=params.a,
        delta=params.delta,
        area=_area(params.c_set, base.spans),
        N=params.N,
        del_constant=params.del_constant,
    )

    def job() -> Optional[PerturbationResult]:
        try:
            return perturb_simple(phi0, base, group, lab, task_rng(config.seed, index))
        except PerturbationError as exc:
            logger.warning("seed %d: %s", index, exc)
            return None

    return job


def build_extension(config: ExperimentConfig) -> HomogeneousExtension:
    params = config.perturb
    base = parse_system(config.system)
    k_group = parse_group(params.k_group)
    elements = None
    if params.subgroup:
        elements = np.stack([parse_element(k_group, h) for h in params.subgroup])
    space = HomogeneousSpace(k_group, elements)
    gamma = parse_cocycle(params.gamma, k_group)
    rotation = None
    if params.fiber == "torus-rotation":
        rotation = GridCocycle.constant(Torus(1), np.array([SQRT2]), base.spans + space.spans)
    fiber = FiberSpec(params.fiber, 1, rotation)
    return HomogeneousExtension(base, space, gamma, fiber)


def _relative_job(config: ExperimentConfig, index: int) -> Callable[[], Optional[PerturbationResult]]:
    params = config.perturb
    extension = build_extension(config)
    group = parse_group(config.group)
    phi0 = parse_cocycle(config.cocycle, group, extension.point_dim, extension.spans)
    lab = PerturbationParams(
        target=parse_element(group, params.target),
        target2=parse_element(group, params.target2 or params.target),
        a=params.a,
        b=params.b,
        delta=params.delta,
        area=_area(params.c_set, extension.spans),
        N=params.N,
        k0_grid=params.k0_grid,
        samples=params.samples,
        del_constant=params.del_constant,
    )

    def job() -> Optional[PerturbationResult]:
        try:
            return perturb_relative(phi0, extension, group, lab, task_rng(config.seed, index))
        except PerturbationError as exc:
            logger.warning("seed %d: %s", index, exc)
            return None

    return job


async def run_perturb(config: ExperimentConfig, threads: int) -> Report:
    params = config.perturb
    make = _simple_job if params.mode == "simple" else _relative_job
    jobs = [make(config, i) for i in range(params.seeds)]
    report = Report("perturb")
    outcomes = []
    for index, result in enumerate(await gather_limited(jobs, threads)):
        if result is None:
            report.add((index, "-", 0.0, 0.0, False))
            outcomes.append(False)
            continue
        for row in result.per_k0:
            report.add((index, format_element(row.k0), row.fraction, result.c_a, row.passed))
        report.add((index, "-", result.fraction, result.c_a, result.passed))
        outcomes.append(result.passed)
        logger.info("seed %d finished: passed=%s notes=%s", index, result.passed, result.notes)
    ok = all(outcomes) if params.require == "all" else any(outcomes)
    if not ok:
        report.fail()
    return report


async def run_lemmas(config: ExperimentConfig, threads: int) -> Report:
    checks = await gather_limited(lemma_tasks(config.lemmas, config.seed), threads)
    report = Report("lemmas")
    for check in checks:
        report.add(
            (check.lemma, check.params_text, check.bound, check.empirical, check.margin, check.passed)
        )
        if not check.passed:
            logger.warning(
                "%s %s failed: %.6g < %.6g",
                check.lemma,
                check.params_text,
                check.empirical,
                check.bound,
            )
            report.fail()
    return report


async def run_tower(config: ExperimentConfig, threads: int) -> Report:
    params = config.tower
    base = parse_system(config.system)
    if config.group.strip().lower() in NO_GROUP:
        phi0 = GridCocycle.constant(Torus(1), np.zeros(1))
    else:
        phi0 = parse_cocycle(config.cocycle, parse_group(config.group))
    report = Report("tower")
    if params.interval is not None:
        profile = return_time_profile(first_return(base, 0.0, params.interval))
        logger.info("return times over [0, %g): %s", params.interval, profile)
    try:
        tower = await asyncio.to_thread(build_tower, base, params.height, params.eps)
    except CoverageUnattainable as exc:
        logger.warning("%s", exc)
        report.fail()
        return report
    pure = purify(tower, phi0, IntervalSet.full())
    for p in range(len(pure)):
        for i in range(pure.height):
            lo = float(pure.tower.positions[p, i])
            report.add(
                (
                    p,
                    i,
                    lo,
                    lo + float(pure.tower.width[p]),
                    format_element(pure.values[p, i]),
                    int(pure.in_c[p, i]),
                )
            )
    if not pure.tower.levels_disjoint():
        logger.warning("tower levels overlap")
        report.fail()
    if params.dump:
        path = Path(config.output).with_suffix(".levels.txt")
        path.write_text("\n".join(pure.dump()) + "\n", encoding="utf-8")
        logger.info("wrote level dump to %s", path)
    return report


RUNNERS: dict[str, Callable[[ExperimentConfig, int], Awaitable[Report]]] = {
    "ergodicity": run_ergodicity,
    "perturb": run_perturb,
    "lemmas": run_lemmas,
    "tower": run_tower,
}


async def run_experiment(config: ExperimentConfig, threads: int = 1) -> Report:
    """Run one experiment, write its CSV to ``config.output`` and return the report."""
    report = await RUNNERS[config.kind](config, threads)
    write_csv(report, config.output)
    logger.info("%s experiment finished: passed=%s", config.kind, report.passed)
    return report


PLOT_HEADERS = {"ergodicity": "n score", "perturb": "k0 fraction"}


def emit_plotdata(report_path: str | Path, out_path: str | Path) -> Path:
    """Two-column plot data: max score against n, or fraction against the first k0 coordinate."""
    report = read_csv(report_path)
    if report.kind not in PLOT_HEADERS:
        raise ReportError(f"no plot data for {report.kind} reports")
    points = []
    if report.kind == "ergodicity":
        best: dict[int, float] = {}
        for _, _, _, n, score, _ in report.rows:
            best[int(n)] = max(best.get(int(n), 0.0), float(score))
        points = sorted(best.items())
    else:
        for _, k0, fraction, _, _ in report.rows:
            if k0 != "-":
                points.append((float(k0.split(";")[0]), float(fraction)))
        points.sort()
    out = Path(out_path)
    lines = [PLOT_HEADERS[report.kind]]
    lines += [f"{format(x, '.12g')} {format(y, '.12g')}" for x, y in points]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote %d plot points to %s", len(points), out)
    return out
