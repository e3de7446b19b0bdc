"""
Metrics normalized to the MPPI baseline over paired trials
"""
import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ttpoe.schemas.controller import Method
from ttpoe.schemas.experiment import NormalizedMetrics, SummaryRow, TrialResult

logger = logging.getLogger(__name__)

BASELINE = Method.MPPI


def _success_rate(rows: Sequence[TrialResult]) -> float:
    return float(np.mean([r.success for r in rows])) if rows else 0.0


def normalized_metrics(baseline: Sequence[TrialResult], method: Sequence[TrialResult]) -> NormalizedMetrics:
    """
    Mean log(steps_method / steps_baseline) and mean log(cost_method / cost_baseline)

    Only trials where both runs succeed with positive steps and cost enter the
    log means; success rates use every trial. Negative values favor the method.
    """
    by_trial = {r.trial: r for r in baseline}
    log_steps: List[float] = []
    log_cost: List[float] = []
    for row in method:
        base = by_trial.get(row.trial)
        if base is None or not (row.success and base.success):
            continue
        if min(row.steps, base.steps) <= 0 or min(row.total_cost, base.total_cost) <= 0:
            continue
        log_steps.append(np.log(row.steps / base.steps))
        log_cost.append(np.log(row.total_cost / base.total_cost))

    pairs = len(log_steps)
    if pairs == 0 and method:
        logger.info("No successful trial pairs; normalized steps and cost are undefined")
    return NormalizedMetrics(
        success_rate=_success_rate(method),
        baseline_success_rate=_success_rate(baseline),
        pairs=pairs,
        mean_log_steps=float(np.mean(log_steps)) if pairs else None,
        mean_log_cost=float(np.mean(log_cost)) if pairs else None,
    )


def summarize(results: Sequence[TrialResult]) -> List[SummaryRow]:
    """One row per (world, method, samples) cell, in method then sample-count order"""
    cells: Dict[Tuple[str, Method, int], List[TrialResult]] = OrderedDict()
    order = {m: i for i, m in enumerate(Method)}
    for row in sorted(results, key=lambda r: (r.world, order[r.method], r.samples, r.trial)):
        cells.setdefault((row.world, row.method, row.samples), []).append(row)

    summary = []
    for (world, method, samples), rows in cells.items():
        baseline: Optional[List[TrialResult]] = cells.get((world, BASELINE, samples))
        metrics = normalized_metrics(baseline or [], rows)
        summary.append(SummaryRow(
            world=world,
            method=method,
            samples=samples,
            trials=len(rows),
            success_rate=metrics.success_rate,
            pairs=metrics.pairs if baseline else 0,
            mean_log_steps=metrics.mean_log_steps if baseline else None,
            mean_log_cost=metrics.mean_log_cost if baseline else None,
            violation_fraction=float(np.mean([r.violation_fraction for r in rows])),
        ))
    return summary
