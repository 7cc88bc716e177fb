"""Observation log, learning scheme, and the incremental learning trace.

A trace holds one fitted trend per level (level = number of observations
consumed so far, starting at 3).  The sequence of trend asymptotes is the
asymptotic backbone; the working level marks where its level-to-level slopes
stay under the normalised verticality threshold for a full look-ahead
window, and the prediction level is the first level from there whose
asymptote does not exceed the 100% accuracy ceiling.

Anchored strategies re-fit levels past the working level with an extra
observation at infinity; the reference (plain) trends are always kept, both
because the working/prediction levels are defined on them and because the
anchoring strategies draw their anchor values from them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .anchoring import AnchoringStrategy, anchor_for_level
from .errors import DegenerateData
from .fitting import FitConfig, FitProblem, FitResult, fit

ACCURACY_CEILING = 100.0


@dataclass(frozen=True)
class Observation:
    level: int
    x: int
    accuracy: float


@dataclass(frozen=True)
class LearningScheme:
    """Kernel size plus step function generating training-set sizes."""

    kernel_size: int
    step: Callable[[int], int]
    description: str = ""

    def positions(self, levels: int) -> list[int]:
        if levels < 1:
            return []
        out = [self.kernel_size]
        for i in range(2, levels + 1):
            delta = self.step(i)
            if delta <= 0:
                raise ValueError("step function must be positive")
            out.append(out[-1] + delta)
        return out

    @staticmethod
    def uniform(kernel: int, step: int, description: str = "") -> "LearningScheme":
        return LearningScheme(kernel_size=kernel, step=lambda i: step,
                              description=description or f"uniform({kernel},{step})")


class ObservationLog:
    """Ordered (level, size, accuracy) samples, levels contiguous from 1."""

    def __init__(self, entries: Iterable[Observation] = (),
                 scheme: Optional[LearningScheme] = None):
        self.entries: list[Observation] = []
        self.scheme = scheme
        for obs in entries:
            self.append(obs)

    def append(self, obs: Observation) -> None:
        expected = len(self.entries) + 1
        if obs.level != expected:
            raise ValueError(f"expected level {expected}, got {obs.level}")
        if self.entries and obs.x <= self.entries[-1].x:
            raise ValueError("sizes must be strictly increasing")
        if obs.x <= 0:
            raise ValueError("size must be positive")
        if not (0.0 < obs.accuracy <= ACCURACY_CEILING):
            raise ValueError("accuracy must lie in (0, 100]")
        if self.scheme is not None:
            want = self.scheme.positions(obs.level)[-1]
            if obs.x != want:
                raise ValueError(
                    f"size {obs.x} at level {obs.level} disagrees with the "
                    f"declared scheme (expected {want})")
        self.entries.append(obs)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @staticmethod
    def from_arrays(x, accuracy, scheme: Optional[LearningScheme] = None) -> "ObservationLog":
        log = ObservationLog(scheme=scheme)
        for i, (xi, yi) in enumerate(zip(x, accuracy), start=1):
            log.append(Observation(level=i, x=int(xi), accuracy=float(yi)))
        return log


@dataclass(frozen=True)
class BackboneEntry:
    level: int
    alpha: float
    x: int


@dataclass(frozen=True)
class TraceParams:
    """Verticality/look-ahead setting plus fit options for one trace."""

    nu: float = 2e-5
    slowdown: int = 1
    look_ahead: int = 5
    fit: FitConfig = field(default_factory=FitConfig)
    anchor_weight: float = 1.0
    plevel_source: str = "reference"    # "reference" | "anchored"
    decreasing_tol: float = 1e-9

    def __post_init__(self):
        if not (0.0 < self.nu < 1.0):
            raise ValueError("nu must lie in (0, 1)")
        if self.slowdown < 1:
            raise ValueError("slowdown must be >= 1")
        if self.look_ahead < 0:
            raise ValueError("look_ahead must be >= 0")
        if self.plevel_source not in ("reference", "anchored"):
            raise ValueError("plevel_source must be 'reference' or 'anchored'")


def normalized_slope(slope: float) -> float:
    """Map a slope in [0, inf) to [0, 1) via s / (s + 1).

    Chosen so that normalized_slope(s) < nu  iff  s < nu / (1 - nu).
    """
    if slope < 0.0:
        raise ValueError("slope must be nonnegative")
    return slope / (slope + 1.0)


def verticality_threshold(nu: float, slowdown: int) -> float:
    """Slope ceiling nu**(1/slowdown) / (1 - nu) used by the working level."""
    return nu ** (1.0 / slowdown) / (1.0 - nu)


def working_level(backbone: list[BackboneEntry], nu: float, slowdown: int,
                  look_ahead: int) -> Optional[int]:
    """Smallest level whose next look_ahead+1 backbone slopes all stay under
    the verticality threshold; None while the window is not yet observable.

    Slopes are taken between consecutive *present* entries, so gaps left by
    skipped levels are bridged by the previous successful level.
    """
    if not (0.0 < nu < 1.0):
        raise ValueError("nu must lie in (0, 1)")
    if slowdown < 1 or look_ahead < 0:
        raise ValueError("slowdown >= 1 and look_ahead >= 0 required")
    threshold = verticality_threshold(nu, slowdown)
    n = len(backbone)
    for start in range(n):
        if start + look_ahead + 1 >= n:
            return None
        window_ok = True
        for j in range(start, start + look_ahead + 1):
            rise = abs(backbone[j + 1].alpha - backbone[j].alpha)
            run = backbone[j + 1].x - backbone[j].x
            if rise / run > threshold:
                window_ok = False
                break
        if window_ok:
            return backbone[start].level
    return None


def prediction_level(backbone: list[BackboneEntry], omega: int) -> Optional[int]:
    """Smallest present level >= omega whose asymptote is <= 100."""
    for entry in backbone:
        if entry.level >= omega and entry.alpha <= ACCURACY_CEILING:
            return entry.level
    return None


class LearningTrace:
    """Single-writer incremental trace; snapshots are plain data."""

    def __init__(self, strategy: AnchoringStrategy,
                 params: TraceParams = TraceParams(),
                 scheme: Optional[LearningScheme] = None):
        self.strategy = strategy
        self.params = params
        self.observations = ObservationLog(scheme=scheme)
        self.reference_trends: dict[int, FitResult] = {}
        self.anchored_trends: dict[int, FitResult] = {}
        self.anchors: dict[int, float] = {}
        self.skipped: dict[int, str] = {}
        self.wlevel: Optional[int] = None
        self.plevel_reference: Optional[int] = None
        self.plevel_anchored: Optional[int] = None
        self._frozen_anchor: Optional[float] = None   # look-ahead switch value

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_log(log: ObservationLog, strategy: AnchoringStrategy,
                 params: TraceParams = TraceParams(),
                 reference: "LearningTrace | None" = None) -> "LearningTrace":
        """Build a trace by replaying the log.

        `reference` may be another trace over the *same* observations and
        parameters whose plain trends are reused instead of refitted (the
        reference route is strategy-independent).
        """
        if reference is not None:
            ref_obs = [(o.level, o.x, o.accuracy) for o in reference.observations]
            new_obs = [(o.level, o.x, o.accuracy) for o in log]
            if ref_obs != new_obs or reference.params != params:
                raise ValueError("reference trace does not match the log/params")
            trace = LearningTrace(strategy, params, scheme=log.scheme)
            for obs in log:
                trace.observations.append(obs)
            trace.reference_trends = dict(reference.reference_trends)
            trace.skipped = dict(reference.skipped)
            trace.wlevel = reference.wlevel
            trace.plevel_reference = reference.plevel_reference
            trace._fit_pending_anchored()
            return trace
        trace = LearningTrace(strategy, params, scheme=log.scheme)
        for obs in log:
            trace.extend(obs)
        return trace

    def extend(self, obs: Observation) -> "LearningTrace":
        self.observations.append(obs)
        n = len(self.observations)
        if n >= 3:
            self._fit_reference(n)
            self._update_levels()
            self._fit_pending_anchored()
        return self

    # -- fitting ----------------------------------------------------------

    def _problem(self, level: int, anchor: Optional[float]) -> FitProblem:
        xs = [o.x for o in self.observations.entries[:level]]
        ys = [o.accuracy for o in self.observations.entries[:level]]
        return FitProblem.from_arrays(xs, ys, anchor=anchor,
                                      anchor_weight=self.params.anchor_weight)

    def _fit_reference(self, level: int) -> None:
        try:
            result = fit(self._problem(level, None), self.params.fit)
        except DegenerateData as exc:
            self.skipped[level] = str(exc)
            return
        if not result.converged:
            self.skipped[level] = "fit diverged"
            return
        self.reference_trends[level] = result

    def _fit_pending_anchored(self) -> None:
        if self.strategy.kind == "none" or self.wlevel is None:
            return
        n = len(self.observations)
        for level in range(self.wlevel + 1, n + 1):
            if level in self.anchored_trends or level in self.skipped:
                continue
            anchor = anchor_for_level(self.strategy, level, self)
            try:
                result = fit(self._problem(level, anchor), self.params.fit)
            except DegenerateData as exc:
                self.skipped[level] = str(exc)
                continue
            if not result.converged:
                self.skipped[level] = "fit diverged"
                continue
            self.anchored_trends[level] = result
            self.anchors[level] = float(anchor)
            if (self.plevel_anchored is None
                    and result.curve.c <= ACCURACY_CEILING):
                self.plevel_anchored = level

    # -- levels -----------------------------------------------------------

    def _update_levels(self) -> None:
        backbone = self.reference_backbone()
        if self.wlevel is None:
            self.wlevel = working_level(backbone, self.params.nu,
                                        self.params.slowdown,
                                        self.params.look_ahead)
        if self.wlevel is not None and self.plevel_reference is None:
            self.plevel_reference = prediction_level(backbone, self.wlevel)

    # -- views ------------------------------------------------------------

    def reference_backbone(self) -> list[BackboneEntry]:
        xs = {o.level: o.x for o in self.observations}
        return [BackboneEntry(level, self.reference_trends[level].curve.c, xs[level])
                for level in sorted(self.reference_trends)]

    def backbone(self) -> list[BackboneEntry]:
        """Active backbone: anchored trends when anchoring, else reference."""
        if self.strategy.kind == "none":
            return self.reference_backbone()
        xs = {o.level: o.x for o in self.observations}
        return [BackboneEntry(level, self.anchored_trends[level].curve.c, xs[level])
                for level in sorted(self.anchored_trends)]

    def trends(self) -> dict[int, FitResult]:
        if self.strategy.kind == "none":
            return dict(self.reference_trends)
        return dict(self.anchored_trends)

    @property
    def plevel(self) -> Optional[int]:
        """Prediction level per the configured source policy."""
        if self.strategy.kind == "none" or self.params.plevel_source == "reference":
            return self.plevel_reference
        return self.plevel_anchored

    def alpha_at(self, level: int) -> float:
        return self.trends()[level].curve.c

    def positions(self) -> dict[int, int]:
        return {o.level: o.x for o in self.observations}

    # -- serialisation ----------------------------------------------------

    def snapshot(self) -> dict:
        trends = self.trends()
        return {
            "strategy": self.strategy.spec_string(),
            "params": {
                "nu": self.params.nu,
                "slowdown": self.params.slowdown,
                "look_ahead": self.params.look_ahead,
                "anchor_weight": self.params.anchor_weight,
                "plevel_source": self.params.plevel_source,
            },
            "observations": [
                {"level": o.level, "size": o.x, "accuracy": o.accuracy}
                for o in self.observations
            ],
            "wlevel": self.wlevel,
            "plevel_reference": self.plevel_reference,
            "plevel_anchored": self.plevel_anchored,
            "anchors": {str(k): v for k, v in sorted(self.anchors.items())},
            "skipped": {str(k): v for k, v in sorted(self.skipped.items())},
            "reference_backbone": [
                {"level": e.level, "alpha": e.alpha, "x": e.x}
                for e in self.reference_backbone()
            ],
            "backbone": [
                {"level": e.level, "alpha": e.alpha, "x": e.x}
                for e in self.backbone()
            ],
            "trends": {
                str(level): {"a": r.curve.a, "b": r.curve.b, "c": r.curve.c,
                             "sse": r.sse,
                             "residual_at_infinity": r.residual_at_infinity}
                for level, r in sorted(trends.items())
            },
        }
