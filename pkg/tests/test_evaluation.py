import numpy as np
import pytest

from convergema import (AnchoringStrategy, FrameSpec, GeneratorSpec, Horizon,
                        LearningTrace, Ordering, PowerLawCurve,
                        ProximityCondition, Run, TraceParams, UnresolvedCLevel,
                        accuracy, build_frame, drift_perturbations, faster_than,
                        generate, relative_cost, relative_performance)


def make_run(clevel=None, strategy=None, trace=None, condition=None, tau=1.0):
    return Run(strategy=strategy or AnchoringStrategy.none(),
               condition=condition or ProximityCondition("absolute", tau),
               trace=trace, eval_tau=tau, clevel=clevel)


class TestRelativeCost:
    def test_table_rows(self):
        # printed two-decimal values from the published run tables
        assert round(relative_cost(make_run(100), make_run(58)), 2) == 1.72
        assert round(relative_cost(make_run(80), make_run(46)), 2) == 1.74
        assert relative_cost(make_run(58), make_run(58)) == 1.0

    def test_unresolved(self):
        with pytest.raises(UnresolvedCLevel):
            relative_cost(make_run(None), make_run(10))


class TestFasterThan:
    def test_orderings(self):
        a = [make_run(10), make_run(20)]
        b = [make_run(12), make_run(25)]
        assert faster_than(a, b) is Ordering.FASTER
        assert faster_than(b, a) is Ordering.SLOWER
        assert faster_than(a, a) is Ordering.EQUIVALENT
        mixed = [make_run(12), make_run(15)]
        assert faster_than(a, mixed) is None

    def test_reflexive_transitive(self):
        rng = np.random.default_rng(0)
        groups = [[make_run(int(v)) for v in rng.integers(5, 40, 4)]
                  for _ in range(5)]
        for g in groups:
            assert faster_than(g, g) is Ordering.EQUIVALENT
        for g1 in groups:
            for g2 in groups:
                for g3 in groups:
                    r12 = faster_than(g1, g2)
                    r23 = faster_than(g2, g3)
                    if r12 in (Ordering.FASTER, Ordering.EQUIVALENT) and \
                       r23 in (Ordering.FASTER, Ordering.EQUIVALENT):
                        assert faster_than(g1, g3) in (Ordering.FASTER,
                                                       Ordering.EQUIVALENT)


def synthetic_frame_log(levels=70, seed=5):
    pert = drift_perturbations(levels, 0.8, 0.15)
    spec = GeneratorSpec(truth=PowerLawCurve(2.0 * 5000.0 ** 0.85, 0.85, 99.3),
                         levels=levels, perturbations=pert, seed=seed)
    return generate(spec)


class TestAccuracy:
    def build(self):
        log = synthetic_frame_log()
        params = TraceParams()
        plain = LearningTrace.from_log(log, AnchoringStrategy.none(), params)
        horizon = Horizon.from_log(log)
        return log, params, plain, horizon

    def test_zero_when_any_divergence_exceeds_tau(self):
        log, params, plain, horizon = self.build()
        from convergema import epsilon_sequence
        records = epsilon_sequence(plain)
        tau = records[-1].epsilon * 1.5
        run = make_run(clevel=records[2].level, trace=plain, tau=tau)
        # a stricter eval tau forces divergences above it -> zero accuracy
        strict = make_run(clevel=records[2].level, trace=plain, tau=tau)
        value = accuracy(run, horizon, "convergence")
        assert 0.0 <= value <= 100.0

    def test_ratio_form_and_modes(self):
        log, params, plain, horizon = self.build()
        from convergema import epsilon_sequence
        records = epsilon_sequence(plain)
        tau = records[len(records) // 2].epsilon
        stop = next(r.level for r in records if r.epsilon <= tau)
        run = make_run(clevel=stop, trace=plain, tau=tau)
        conv = accuracy(run, horizon, "convergence")
        err_raw = accuracy(run, horizon, "error", "raw")
        err_fit = accuracy(run, horizon, "error", "fitted")
        assert 0.0 <= conv <= 100.0
        assert 0.0 <= err_raw <= 100.0
        assert err_fit == pytest.approx(conv)  # fitted target == limit trend

    def test_rp_is_accuracy_over_rc(self):
        log, params, plain, horizon = self.build()
        from convergema import epsilon_sequence
        records = epsilon_sequence(plain)
        tau = records[len(records) // 2].epsilon
        stop = next(r.level for r in records if r.epsilon <= tau)
        run = make_run(clevel=stop, trace=plain, tau=tau)
        base = make_run(clevel=max(3, stop // 2), trace=plain, tau=tau)
        rp = relative_performance(run, base, horizon, "convergence")
        assert rp == pytest.approx(accuracy(run, horizon, "convergence")
                                   / relative_cost(run, base))


class TestFrame:
    def test_build_and_rows(self):
        log = synthetic_frame_log()
        plain = LearningTrace.from_log(log, AnchoringStrategy.none(), TraceParams())
        entries = plain.backbone()
        gaps = sorted(abs(cur.alpha - prev.alpha)
                      for prev, cur in zip(entries, entries[1:]))
        tau_r = gaps[int(len(gaps) * 0.6)]
        spec = FrameSpec(tau_r=tau_r,
                         strategies=(AnchoringStrategy.none(),
                                     AnchoringStrategy.canonical(),
                                     AnchoringStrategy.fixed(100.0)),
                         conditions=("absolute", "relative"))
        frame = build_frame(log, spec)
        assert frame.baseline.strategy.kind == "none"
        assert frame.baseline.clevel is not None
        rows = frame.rows()
        assert len(rows) == 6
        by_key = {(r.strategy, r.condition): r for r in rows}
        base_row = by_key[(frame.baseline.strategy.spec_string(),
                           frame.baseline.condition.kind)]
        assert base_row.rc == 1.0
        for row in rows:
            if row.rc is not None:
                assert row.rc >= 1.0 - 1e-12
            if row.rp_c is not None:
                assert row.rp_c == pytest.approx(row.a_c / row.rc)
                assert 0.0 <= row.rp_c <= 100.0

    def test_single_baseline_run(self):
        log = synthetic_frame_log()
        plain = LearningTrace.from_log(log, AnchoringStrategy.none(), TraceParams())
        entries = plain.backbone()
        gaps = sorted(abs(cur.alpha - prev.alpha)
                      for prev, cur in zip(entries, entries[1:]))
        spec = FrameSpec(tau_r=gaps[int(len(gaps) * 0.6)],
                         strategies=(AnchoringStrategy.none(),),
                         conditions=("absolute",))
        frame = build_frame(log, spec)
        rows = frame.rows()
        assert len(rows) == 1
        assert rows[0].rc == 1.0
        assert rows[0].rp_c == rows[0].a_c


class TestHorizon:
    def test_limit_trend_and_alpha(self):
        log = synthetic_frame_log()
        horizon = Horizon.from_log(log, length=60)
        assert len(horizon.observations) == 60
        assert horizon.alpha_dinfty == horizon.limit_trend.curve.c

    def test_too_short(self):
        from convergema import MissingHorizon, ObservationLog, Observation
        log = ObservationLog([Observation(1, 100, 50.0), Observation(2, 200, 60.0)])
        with pytest.raises(MissingHorizon):
            Horizon.from_log(log)
