"""Runs, local testing frames, and the RC / accuracy / RP metric suite.

A run is one (anchoring strategy, proximity condition) combination over a
shared observation stream.  Within a frame, the anchor-free run with the
fastest condition is the baseline; costs are convergence levels relative to
it, and accuracies measure how tightly the converging trend tracks an
oracle horizon from the threshold level onward.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .anchoring import AnchoringStrategy
from .convergence import (ProximityCondition, clevel, epsilon_sequence,
                          normalize_threshold, put, threshold_level)
from .curves import evaluate
from .errors import (ConvergemaError, MissingHorizon, NotDecreasing,
                     NotReached, UnresolvedCLevel)
from .fitting import FitConfig, FitProblem, FitResult, fit
from .traces import LearningTrace, ObservationLog, TraceParams


@dataclass(frozen=True)
class Horizon:
    """Oracle-provided long observation set and its limit trend."""

    observations: ObservationLog
    limit_trend: FitResult

    @property
    def alpha_dinfty(self) -> float:
        return self.limit_trend.curve.c

    @staticmethod
    def from_log(log: ObservationLog, fit_config: FitConfig = FitConfig(),
                 length: Optional[int] = None) -> "Horizon":
        entries = log.entries if length is None else log.entries[:length]
        if len(entries) < 3:
            raise MissingHorizon("horizon needs at least 3 observations")
        sub = ObservationLog(entries)
        problem = FitProblem.from_arrays([o.x for o in sub], [o.accuracy for o in sub])
        return Horizon(observations=sub, limit_trend=fit(problem, fit_config))


@dataclass
class Run:
    """One testing round: a trace plus its stopping rule."""

    strategy: AnchoringStrategy
    condition: ProximityCondition
    trace: LearningTrace
    eval_tau: float                     # frame's absolute threshold
    clevel: Optional[int] = None
    note: str = ""

    @property
    def plevel(self) -> Optional[int]:
        return self.trace.plevel


class Ordering(Enum):
    FASTER = "faster"
    SLOWER = "slower"
    EQUIVALENT = "equivalent"


def relative_cost(run: Run, baseline: Run) -> float:
    """CLevel ratio against the frame's baseline; 1 for the baseline itself."""
    if run.clevel is None or baseline.clevel is None:
        raise UnresolvedCLevel("relative cost needs both convergence levels")
    return run.clevel / baseline.clevel


def _threshold_level_for(run: Run) -> int:
    records = epsilon_sequence(run.trace)
    omega = run.trace.wlevel
    iota = threshold_level(records, run.eval_tau, omega)
    if iota is None:
        raise NotReached("threshold level for the evaluation tau not reached")
    return iota


def accuracy(run: Run, horizon: Optional[Horizon], mode: str,
             error_target: str = "raw") -> float:
    """Convergence/error accuracy in [0, 100]: zero when any divergence past
    the threshold level exceeds tau, else the largest one as a percentage
    of tau.

    Divergences are taken at horizon positions from the threshold level
    onward plus the asymptote pair; the error mode compares against the raw
    horizon observations (or the fitted limit trend with --error-target
    fitted), with the limit trend's asymptote at infinity in both modes.
    """
    if horizon is None:
        raise MissingHorizon("accuracy needs a horizon")
    if mode not in ("convergence", "error"):
        raise ValueError("mode must be 'convergence' or 'error'")
    if error_target not in ("raw", "fitted"):
        raise ValueError("error_target must be 'raw' or 'fitted'")
    if run.clevel is None:
        raise UnresolvedCLevel("accuracy is computed at the convergence level")
    iota = _threshold_level_for(run)
    trend = run.trace.trends()[run.clevel].curve
    tau = run.eval_tau

    divergences = []
    for obs in horizon.observations:
        if obs.level < iota:
            continue
        predicted = evaluate(trend, float(obs.x))
        if mode == "convergence" or error_target == "fitted":
            target = evaluate(horizon.limit_trend.curve, float(obs.x))
        else:
            target = obs.accuracy
        divergences.append(abs(target - predicted))
    divergences.append(abs(horizon.alpha_dinfty - trend.c))
    worst = max(divergences)
    if worst > tau:
        return 0.0
    return 100.0 * worst / tau


def relative_performance(run: Run, baseline: Run, horizon: Optional[Horizon],
                         mode: str, error_target: str = "raw") -> float:
    return accuracy(run, horizon, mode, error_target) / relative_cost(run, baseline)


def faster_than(runs_a: list[Run], runs_b: list[Run]) -> Optional[Ordering]:
    """Order two condition groups by paired CLevels; None when mixed."""
    if len(runs_a) != len(runs_b) or not runs_a:
        raise ValueError("need equal-length, non-empty run groups")
    a_le = all(ra.clevel is not None and rb.clevel is not None
               and ra.clevel <= rb.clevel for ra, rb in zip(runs_a, runs_b))
    b_le = all(ra.clevel is not None and rb.clevel is not None
               and rb.clevel <= ra.clevel for ra, rb in zip(runs_a, runs_b))
    if a_le and b_le:
        return Ordering.EQUIVALENT
    if a_le:
        return Ordering.FASTER
    if b_le:
        return Ordering.SLOWER
    return None


@dataclass(frozen=True)
class FrameSpec:
    """Declarative frame: which strategies and conditions to cross."""

    tau_r: float
    strategies: tuple[AnchoringStrategy, ...]
    conditions: tuple[str, ...] = ("absolute", "relative")
    params: TraceParams = field(default_factory=TraceParams)
    horizon_len: Optional[int] = None
    error_target: str = "raw"


@dataclass
class FrameRow:
    strategy: str
    condition: str
    tau: float
    plevel: Optional[int]
    clevel: Optional[int]
    rc: Optional[float]
    a_c: Optional[float]
    a_e: Optional[float]
    rp_c: Optional[float]
    rp_e: Optional[float]
    put: Optional[float]
    look_ahead: Optional[int]
    note: str = ""


@dataclass
class LocalTestingFrame:
    spec: FrameSpec
    tau_a: float
    horizon: Horizon
    runs: list[Run]
    baseline: Run

    def rows(self) -> list[FrameRow]:
        out = []
        for run in self.runs:
            rc = a_c = a_e = rp_c = rp_e = put_val = None
            if run.clevel is not None:
                rc = relative_cost(run, self.baseline)
                try:
                    a_c = accuracy(run, self.horizon, "convergence",
                                   self.spec.error_target)
                    a_e = accuracy(run, self.horizon, "error",
                                   self.spec.error_target)
                    rp_c = a_c / rc
                    rp_e = a_e / rc
                except (NotReached, ConvergemaError):
                    pass
            look = run.strategy.look_ahead
            if (run.strategy.kind == "fixed_look_ahead"
                    and run.trace.plevel is not None):
                switch = run.trace.plevel + run.strategy.look_ahead
                if switch > run.trace.plevel + 1:
                    try:
                        put_val = put(run.trace,
                                      ProximityCondition("absolute", self.tau_a),
                                      switch)
                    except (NotReached, ValueError, ConvergemaError):
                        put_val = None
            out.append(FrameRow(strategy=run.strategy.spec_string(),
                                condition=run.condition.kind,
                                tau=run.condition.tau,
                                plevel=run.plevel, clevel=run.clevel,
                                rc=rc, a_c=a_c, a_e=a_e, rp_c=rp_c, rp_e=rp_e,
                                put=put_val, look_ahead=look, note=run.note))
        return out


def build_frame(log: ObservationLog, spec: FrameSpec) -> LocalTestingFrame:
    """Build all runs, normalise the absolute threshold from the relative
    one on the anchor-free reference, and pick the baseline (the anchor-free
    run of the fastest condition)."""
    horizon = Horizon.from_log(log, spec.params.fit, spec.horizon_len)
    reference = LearningTrace.from_log(log, AnchoringStrategy.none(), spec.params)
    tau_a = normalize_threshold(reference, spec.tau_r)

    runs: list[Run] = []
    for strategy in spec.strategies:
        if strategy.kind == "none":
            trace = reference
        else:
            trace = LearningTrace.from_log(log, strategy, spec.params,
                                           reference=reference)
        for kind in spec.conditions:
            tau = tau_a if kind == "absolute" else spec.tau_r
            condition = ProximityCondition(kind, tau)
            run = Run(strategy=strategy, condition=condition, trace=trace,
                      eval_tau=tau_a)
            try:
                run.clevel = clevel(trace, condition)
            except NotDecreasing as exc:
                run.note = f"inapplicable: {exc}"
            runs.append(run)

    candidates = [r for r in runs if r.strategy.kind == "none"
                  and r.clevel is not None]
    if not candidates:
        raise UnresolvedCLevel("no anchor-free run converged; frame has no baseline")
    baseline = min(candidates, key=lambda r: r.clevel)
    return LocalTestingFrame(spec=spec, tau_a=tau_a, horizon=horizon,
                             runs=runs, baseline=baseline)
