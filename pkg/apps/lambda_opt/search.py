"""Per-clip search for the Lagrangian multiplier scale k."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from apps.codec_gateway.gateway import CodecGateway, curve_from_results, rd_sweep
from apps.core.exceptions import ClipforgeError
from apps.metrics.bjontegaard import bd_rate
from apps.metrics.domain import RDCurve
from apps.optimizers.domain import SearchReport
from apps.optimizers.powell import powell_min
from apps.optimizers.scalar import minimize_scalar
from utils.monitoring import monitor_performance

from .domain import EarlyStop, HistoryEntry, LambdaSearchConfig, LambdaSearchOutcome, best_so_far

logger = logging.getLogger("clipforge.lambda_opt")

NO_IMPROVEMENT = "no improvement"


@dataclass(frozen=True)
class ContinueDecision:
    proceed: bool
    reason: Optional[str] = None

    def __bool__(self):
        return self.proceed


def should_continue(history: Sequence[float], early_stop: EarlyStop, encodes_used: int = 0) -> ContinueDecision:
    """Stop once the encode budget is spent, or when the best BD-rate has
    improved by less than min_improvement_pct over the last `patience` steps."""
    if encodes_used >= early_stop.encode_budget:
        return ContinueDecision(False, f"encode budget exhausted ({encodes_used}/{early_stop.encode_budget})")
    best = best_so_far(list(history))
    if len(best) > early_stop.patience:
        gained = best[-1 - early_stop.patience] - best[-1]
        if gained < early_stop.min_improvement_pct:
            return ContinueDecision(
                False,
                f"improved {gained:.4f} points over the last {early_stop.patience} iterations",
            )
    return ContinueDecision(True)


class _StopSearch(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class SearchState:
    """Book-keeping shared by the cost function and the optimizer callbacks."""

    def __init__(self, gateway: CodecGateway, clip, config: LambdaSearchConfig):
        self.gateway = gateway
        self.clip = clip
        self.config = config
        self.k_dims = max(len(gateway.frame_groups), config.dims)
        self.encodes = 0
        self.encode_time = 0.0
        self.history: List[HistoryEntry] = []
        self.outer_best: List[float] = []

    def sweep(self, k_vector):
        results = rd_sweep(self.gateway, self.clip, k_vector, self.config.workers, self.config.qp_list)
        self.encodes += sum(1 for r in results if "cached" not in r.flags)
        self.encode_time += sum(r.wall_time for r in results)
        return curve_from_results(results, self.config.metric, source=getattr(self.clip, "source_id", None))

    def k_vector(self, log_k) -> tuple:
        k = [self.config.clamp(math.exp(v)) for v in np.atleast_1d(log_k)]
        return tuple(k) + (1.0,) * (self.k_dims - len(k))

    def record(self, k, cost):
        self.history.append(HistoryEntry(k=tuple(k[: self.config.dims]), bd_rate=cost, encodes_used=self.encodes))


def bd_cost(gateway: CodecGateway, clip, k_vector, baseline_curve: RDCurve, config: LambdaSearchConfig) -> float:
    """BD-rate of encoding with k_vector against the k = 1 baseline.

    Encode or curve failures come back as +inf so a line search backs off.
    """
    try:
        results = rd_sweep(gateway, clip, k_vector, config.workers, config.qp_list)
        test_curve = curve_from_results(results, config.metric)
        return bd_rate(test_curve, baseline_curve)
    except (ClipforgeError, ValueError) as exc:
        logger.warning(f"cost evaluation at k={tuple(k_vector)} failed: {exc}")
        return math.inf


@monitor_performance("optimize_k", min_log_time=0.0)
def optimize_k(gateway: CodecGateway, clip, config: LambdaSearchConfig, baseline: Optional[RDCurve] = None) -> LambdaSearchOutcome:
    """Search ln(k) with bracket + Brent (one multiplier) or Powell (two)."""
    state = SearchState(gateway, clip, config)
    baseline = baseline if baseline is not None else state.sweep((1.0,) * state.k_dims)

    def cost(log_k):
        k = state.k_vector(log_k)
        try:
            value = bd_rate(state.sweep(k), baseline)
        except (ClipforgeError, ValueError) as exc:
            logger.warning(f"cost evaluation at k={k} failed: {exc}")
            value = math.inf
        state.record(k, value)
        # two-multiplier searches apply the patience rule per Powell iteration
        trend = [h.bd_rate for h in state.history] if config.dims == 1 else []
        decision = should_continue(trend, config.early_stop, state.encodes)
        if not decision:
            raise _StopSearch(decision.reason)
        return value

    def after_outer_iteration(iteration, x, fx):
        state.outer_best.append(min(h.bd_rate for h in state.history))
        decision = should_continue(state.outer_best, config.early_stop, state.encodes)
        if not decision:
            raise _StopSearch(decision.reason)

    terminated = None
    report: Optional[SearchReport] = None
    try:
        if config.dims == 1:
            report = minimize_scalar(
                cost, 0.0, config.initial_step, config.log_bounds, x_tol=config.x_tol, max_iter=config.max_iter
            )
        else:
            report = powell_min(
                cost,
                (0.0, 0.0),
                x_tol=config.x_tol,
                max_iter=config.max_iter,
                bounds=[config.log_bounds] * 2,
                step=config.initial_step,
                callback=after_outer_iteration,
            )
    except _StopSearch as stop:
        terminated = stop.reason
        logger.info(f"{getattr(clip, 'source_id', '') or 'clip'}: early stop, {stop.reason}")

    best = min(state.history, key=lambda h: h.bd_rate)
    dims_one = (1.0,) * config.dims
    if not (math.isfinite(best.bd_rate) and best.bd_rate < 0):
        k_opt, gain, terminated = dims_one, 0.0, NO_IMPROVEMENT
    else:
        k_opt, gain = best.k, best.bd_rate

    if report is not None:
        optimizer_iterations = report.iterations
    elif config.dims == 2:
        optimizer_iterations = max(len(state.outer_best), 1)
    else:
        optimizer_iterations = len(state.history)

    return LambdaSearchOutcome(
        source_id=getattr(clip, "source_id", ""),
        k_opt=tuple(k_opt),
        bd_rate_gain=gain,
        iterations=len(state.history),
        optimizer_iterations=optimizer_iterations,
        total_encodes=state.encodes,
        wall_time=state.encode_time,
        history=tuple(state.history),
        terminated_early=terminated,
        converged=bool(report and report.converged),
        boundary=bool(report and report.boundary),
        proxy=config.proxy,
    )
