"""Trend intersections, the epsilon bound sequence, stop decisions and
look-ahead tuning.

For a trace whose asymptotic backbone decreases past level omega+1, the
last intersection point q of two consecutive trends bounds the disagreement
of every later trend on [q_x, inf) by epsilon_i = |q_y - alpha_i|; the
epsilon sequence decreases to zero outside rupture levels, so the first
level with epsilon <= tau ends the training for the absolute proximity
condition.  The relative condition instead watches backbone gaps, and the
percentage of uncovered threshold (PUT) normalises the remaining distance,
which drives the choice of the look-ahead for anchor updates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import PowerLawCurve, evaluate
from .errors import (CoincidentCurves, MissingWLevel, NotDecreasing,
                     NotReached)
from .traces import LearningTrace

_COINCIDENT_TOL = 1e-12
_GRID_CELLS = 2048
_X_MAX_FACTOR = 1e3
_X_MIN_FACTOR = 1e-3
_TAIL_LIMIT = 1e280


@dataclass(frozen=True)
class IntersectionSet:
    first: Optional[tuple[float, float]]
    last: Optional[tuple[float, float]]
    count: int


@dataclass(frozen=True)
class EpsilonRecord:
    level: int
    epsilon: float
    q: Optional[tuple[float, float]]
    is_rupture: bool


@dataclass(frozen=True)
class ProximityCondition:
    kind: str          # "absolute" | "relative"
    tau: float

    def __post_init__(self):
        if self.kind not in ("absolute", "relative"):
            raise ValueError("condition kind must be 'absolute' or 'relative'")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")


def _difference(c1: PowerLawCurve, c2: PowerLawCurve, x: float) -> float:
    return (c2.a * math.pow(x, -c2.b) - c1.a * math.pow(x, -c1.b)
            + c1.c - c2.c)


def _geo_mid(lo: float, hi: float) -> float:
    # sqrt(lo * hi) without overflowing for huge tail brackets
    return lo * math.sqrt(hi / lo)


def _bisect_root(c1, c2, lo, hi, d_lo):
    for _ in range(200):
        mid = _geo_mid(lo, hi)
        if mid <= lo or mid >= hi:
            break
        d_mid = _difference(c1, c2, mid)
        if d_lo * d_mid <= 0.0:
            hi = mid
        else:
            lo = mid
            d_lo = d_mid
        if hi - lo < 1e-12 * mid:
            break
    return _geo_mid(lo, hi)


def intersect(c1: PowerLawCurve, c2: PowerLawCurve, x_min: float,
              x_max: Optional[float] = None,
              cells: int = _GRID_CELLS) -> IntersectionSet:
    """All intersection points of two curves on [x_min, inf).

    A geometric grid over [x_min, x_max] is scanned for sign changes, each
    refined by bisection; the tail beyond x_max needs no grid because the
    difference is dominated there by the asymptote gap, so a single root is
    bracketed analytically whenever the sign at x_max disagrees with it.
    """
    if x_min <= 0.0:
        raise ValueError("x_min must be positive")
    if x_max is None:
        x_max = x_min * 1e9
    grid = np.geomspace(x_min, x_max, cells + 1)
    diff = evaluate(c1, grid) - evaluate(c2, grid)
    asym_gap = c1.c - c2.c
    if max(float(np.max(np.abs(diff))), abs(asym_gap)) < _COINCIDENT_TOL:
        raise CoincidentCurves("curves agree within 1e-12 on the scan grid")

    roots: list[float] = []
    sign = np.sign(diff)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        roots.append(_bisect_root(c1, c2, float(grid[i]), float(grid[i + 1]),
                                  float(diff[i])))
    for i in np.nonzero(diff == 0.0)[0]:
        roots.append(float(grid[i]))

    tail_sign = float(diff[-1])
    if tail_sign != 0.0 and asym_gap != 0.0 and (tail_sign > 0) != (asym_gap > 0):
        lo = float(x_max)
        hi = lo * 10.0
        while (_difference(c1, c2, hi) > 0) == (tail_sign > 0) and hi < _TAIL_LIMIT:
            lo = hi
            hi *= 10.0
        roots.append(_bisect_root(c1, c2, lo, hi, _difference(c1, c2, lo)))

    # merge numerically duplicated roots
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9 * r:
            merged.append(r)
    if len(merged) > 2:
        # many crossings can only come from a difference that never leaves
        # the fit-precision noise band: the trends are indistinguishable
        if max(float(np.max(np.abs(diff))), abs(asym_gap)) < 1e-9:
            raise CoincidentCurves(
                "curves differ only at fit-precision level on the scan grid")
        raise RuntimeError(
            f"power-law difference produced {len(merged)} roots; at most 2 "
            "are possible for distinct curves")
    if not merged:
        return IntersectionSet(first=None, last=None, count=0)
    pts = [(r, evaluate(c1, r)) for r in merged]
    return IntersectionSet(first=pts[0], last=pts[-1], count=len(pts))


def _active_levels(trace: LearningTrace) -> list[int]:
    return sorted(trace.trends())


def _check_decreasing(trace: LearningTrace) -> None:
    """Raise NotDecreasing when the active backbone rises past omega+1."""
    if trace.strategy.kind in ("fixed", "fixed_look_ahead"):
        return
    omega = trace.wlevel
    if omega is None:
        raise MissingWLevel("epsilon sequence needs a resolved working level")
    entries = [e for e in trace.backbone() if e.level > omega + 1]
    for prev, cur in zip(entries, entries[1:]):
        if cur.alpha - prev.alpha > trace.params.decreasing_tol:
            raise NotDecreasing(
                f"backbone rises by {cur.alpha - prev.alpha:.3e} at level "
                f"{cur.level}; for increasing backbones the bound depends on "
                "the unknown final accuracy, so absolute thresholds need a "
                "decreasing backbone (use fixed anchoring)")


def epsilon_sequence(trace: LearningTrace) -> list[EpsilonRecord]:
    """Epsilon bound per level, from the last intersection of consecutive
    trends; rupture levels (intersection-count transitions, anchor changes,
    degenerate pairs) are flagged and carry the previous epsilon forward.
    """
    omega = trace.wlevel
    if omega is None:
        raise MissingWLevel("epsilon sequence needs a resolved working level")
    _check_decreasing(trace)
    trends = trace.trends()
    levels = _active_levels(trace)
    positions = trace.positions()
    xs = [positions[o] for o in sorted(positions)]
    x_min = xs[0] * _X_MIN_FACTOR
    x_max = xs[-1] * _X_MAX_FACTOR

    records: list[EpsilonRecord] = []
    prev_count: Optional[int] = None
    prev_eps: Optional[float] = None
    start = max(4, omega + 2)
    for prev_level, level in zip(levels, levels[1:]):
        if level < start:
            continue
        anchor_changed = trace.anchors.get(level) != trace.anchors.get(prev_level)
        try:
            inter = intersect(trends[prev_level].curve, trends[level].curve,
                              x_min, x_max)
        except CoincidentCurves:
            eps = prev_eps if prev_eps is not None else 0.0
            records.append(EpsilonRecord(level=level, epsilon=eps, q=None,
                                         is_rupture=True))
            prev_eps = eps
            continue
        if inter.count == 0:
            eps = prev_eps if prev_eps is not None else 0.0
            records.append(EpsilonRecord(level=level, epsilon=eps, q=None,
                                         is_rupture=True))
            prev_eps = eps
            prev_count = 0
            continue
        rupture = anchor_changed or (prev_count is not None
                                     and inter.count != prev_count)
        q = inter.last
        eps = abs(q[1] - trends[level].curve.c)
        records.append(EpsilonRecord(level=level, epsilon=eps, q=q,
                                     is_rupture=rupture))
        prev_count = inter.count
        prev_eps = eps
    return records


def threshold_level(records: list[EpsilonRecord], tau: float,
                    omega: int) -> Optional[int]:
    """Smallest non-rupture level past omega+1 with epsilon <= tau."""
    for rec in records:
        if rec.level > omega + 1 and not rec.is_rupture and rec.epsilon <= tau:
            return rec.level
    return None


def clevel(trace: LearningTrace, condition: ProximityCondition) -> Optional[int]:
    """Level at which the proximity condition first holds; None if not yet."""
    if condition.kind == "absolute":
        records = epsilon_sequence(trace)
        omega = trace.wlevel
        return threshold_level(records, condition.tau, omega)

    plevel = trace.plevel
    if plevel is None:
        return None
    entries = [e for e in trace.backbone()]
    look = trace.params.look_ahead
    gaps = []
    for prev, cur in zip(entries, entries[1:]):
        gaps.append((cur.level, abs(cur.alpha - prev.alpha)))
    for idx, (level, _) in enumerate(gaps):
        if level <= plevel:
            continue
        window = gaps[idx:idx + look + 1]
        if len(window) < look + 1:
            return None
        if all(g <= condition.tau for _, g in window):
            return level
    return None


def normalize_threshold(trace: LearningTrace, tau_r: float) -> float:
    """Absolute threshold equivalent to a relative one: the epsilon bound at
    the level where the relative condition stops on this trace."""
    stop = clevel(trace, ProximityCondition("relative", tau_r))
    if stop is None:
        raise NotReached("relative condition does not stop within the trace")
    records = epsilon_sequence(trace)
    for rec in records:
        if rec.level >= stop:
            return rec.epsilon
    raise NotReached(f"no epsilon available at or after level {stop}")


def _distance_estimate(trace: LearningTrace, condition: ProximityCondition,
                       level: int,
                       records: Optional[list[EpsilonRecord]] = None) -> float:
    """The condition's estimate of the remaining distance to final accuracy."""
    if condition.kind == "absolute":
        if records is None:
            records = epsilon_sequence(trace)
        for rec in records:
            if rec.level >= level:
                return rec.epsilon
        raise NotReached(f"no epsilon record at or after level {level}")
    entries = trace.backbone()
    for prev, cur in zip(entries, entries[1:]):
        if cur.level >= level:
            return abs(cur.alpha - prev.alpha)
    raise NotReached(f"no backbone gap at or after level {level}")


def put(trace: LearningTrace, condition: ProximityCondition, level: int,
        records: Optional[list[EpsilonRecord]] = None) -> float:
    """Percentage of uncovered threshold at `level`, in [0, 100]."""
    if trace.strategy.kind not in ("fixed", "fixed_look_ahead"):
        raise ValueError("PUT is defined for fixed anchoring traces")
    plevel = trace.plevel
    if plevel is None:
        raise NotReached("PUT needs a resolved prediction level")
    if level <= plevel + 1:
        raise ValueError(f"PUT is defined for levels above {plevel + 1}")
    if records is None and condition.kind == "absolute":
        records = epsilon_sequence(trace)
    d_here = _distance_estimate(trace, condition, level, records)
    if d_here < condition.tau:
        return 0.0
    d_base = _distance_estimate(trace, condition, plevel + 2, records)
    span = d_base - condition.tau
    if span <= 0.0:
        return 0.0
    return 100.0 * (d_here - condition.tau) / span


def minimal_look_ahead(trace: LearningTrace, condition: ProximityCondition,
                       zeta: float,
                       records: Optional[list[EpsilonRecord]] = None) -> int:
    """Smallest level past plevel+1 whose PUT is <= zeta, minus plevel."""
    if not (0.0 <= zeta <= 100.0):
        raise ValueError("zeta must lie in [0, 100]")
    plevel = trace.plevel
    if plevel is None:
        raise NotReached("minimal look-ahead needs a prediction level")
    if records is None and condition.kind == "absolute":
        records = epsilon_sequence(trace)
    top = max(trace.trends(), default=0)
    for level in range(plevel + 2, top + 1):
        try:
            if put(trace, condition, level, records) <= zeta:
                return level - plevel
        except NotReached:
            break
    raise NotReached(f"no level reaches PUT <= {zeta} within the trace")


@dataclass(frozen=True)
class TuningCandidate:
    zeta: float
    look_ahead: Optional[int]
    clevel: Optional[int]
    rc: Optional[float]


@dataclass(frozen=True)
class TuningResult:
    look_ahead: int
    zeta: float
    put_at_switch: float
    rc: float
    candidates: tuple[TuningCandidate, ...]


def find_optimal_look_ahead(log, params, tau: float, beta: float,
                            baseline_clevel: int,
                            zetas=tuple(float(z) for z in range(100, -1, -10)),
                            reference=None) -> TuningResult:
    """Sweep tentative PUT values, build the candidate run for the minimal
    look-ahead of each, and pick the turning point of the relative-cost
    sequence: the candidate that starts the longest strictly increasing RC
    window (ties to the smallest look-ahead)."""
    from .anchoring import AnchoringStrategy
    from .traces import LearningTrace

    condition = ProximityCondition("absolute", tau)
    if reference is None:
        reference = LearningTrace.from_log(log, AnchoringStrategy.none(), params)
    base = LearningTrace.from_log(log, AnchoringStrategy.fixed(beta), params,
                                  reference=reference)
    base_records = epsilon_sequence(base)

    candidates: list[TuningCandidate] = []
    by_look: dict[int, tuple[Optional[int], Optional[float]]] = {}
    for zeta in zetas:
        try:
            look = minimal_look_ahead(base, condition, zeta, base_records)
        except NotReached:
            candidates.append(TuningCandidate(zeta, None, None, None))
            continue
        if look not in by_look:
            trace = LearningTrace.from_log(
                log, AnchoringStrategy.fixed_with_look_ahead(beta, look),
                params, reference=reference)
            stop = clevel(trace, condition)
            rc = None if stop is None else stop / baseline_clevel
            by_look[look] = (stop, rc)
        stop, rc = by_look[look]
        candidates.append(TuningCandidate(zeta, look, stop, rc))

    chosen = _select_turning_point(candidates)
    put_at_switch = put(base, condition, base.plevel + chosen.look_ahead,
                        base_records)
    return TuningResult(look_ahead=chosen.look_ahead, zeta=chosen.zeta,
                        put_at_switch=put_at_switch, rc=chosen.rc,
                        candidates=tuple(candidates))


def _select_turning_point(candidates) -> TuningCandidate:
    """The candidate starting the longest strictly increasing RC window;
    ties resolve to the earliest (smallest look-ahead, as the sweep visits
    look-aheads in increasing order)."""
    scored = [c for c in candidates if c.rc is not None]
    if not scored:
        raise NotReached("no tuning candidate converged within the trace")
    rcs = [c.rc for c in scored]
    best_idx = 0
    best_window = -1
    for i in range(len(scored)):
        length = 0
        while (i + length + 1 < len(scored)
               and rcs[i + length + 1] > rcs[i + length]):
            length += 1
        if length > best_window:
            best_window = length
            best_idx = i
    return scored[best_idx]
