"""Command line front end: analyze, tune, evaluate, simulate.

Exit codes: 0 converged / success, 2 analyzed but not converged yet,
1 error.  CSV in, JSON + CSV out; no timestamps in reports so identical
inputs produce byte-identical outputs.
"""
from __future__ import annotations

import json
import os
import sys

import click

from .anchoring import AnchoringStrategy
from .convergence import (ProximityCondition, clevel, epsilon_sequence,
                          find_optimal_look_ahead, put)
from .curves import PowerLawCurve
from .errors import ConvergemaError, NotDecreasing
from .evaluation import FrameSpec, build_frame
from .fitting import FitConfig
from .io import (read_observations, write_json, write_observations,
                 write_series_csv)
from .synth import GeneratorSpec, generate
from .traces import LearningScheme, LearningTrace, TraceParams

SEED_ENV = "CONVERGEMA_SEED"


def _params(nu, slowdown, look_ahead, fit_tol, fit_max_iter, anchor_weight,
            plevel_source) -> TraceParams:
    return TraceParams(nu=nu, slowdown=slowdown, look_ahead=look_ahead,
                       fit=FitConfig(sse_tol=fit_tol, max_iter=fit_max_iter),
                       anchor_weight=anchor_weight,
                       plevel_source=plevel_source)


def _scheme(kernel, step):
    if kernel is None and step is None:
        return None
    if kernel is None or step is None:
        raise click.ClickException("--kernel and --step must be given together")
    return LearningScheme.uniform(kernel, step)


def _common_options(fn):
    fn = click.option("--kernel", type=int, default=None,
                      help="Declared kernel size; with --step, input sizes "
                           "are validated against the uniform scheme.")(fn)
    fn = click.option("--step", type=int, default=None,
                      help="Declared uniform step size.")(fn)
    fn = click.option("--nu", type=float, default=2e-5, show_default=True,
                      help="Verticality threshold (0 < nu < 1).")(fn)
    fn = click.option("--slowdown", type=int, default=1, show_default=True,
                      help="Slowdown exponent for the verticality threshold.")(fn)
    fn = click.option("--lambda", "look_ahead", type=int, default=5,
                      show_default=True,
                      help="Look-ahead window for level detection.")(fn)
    fn = click.option("--fit-tol", type=float, default=1e-12, show_default=True,
                      help="Relative SSE improvement tolerance.")(fn)
    fn = click.option("--fit-max-iter", type=int, default=200, show_default=True,
                      help="Trust-region iteration cap.")(fn)
    fn = click.option("--anchor-weight", type=float, default=1.0,
                      show_default=True, help="Weight of the infinity point.")(fn)
    fn = click.option("--plevel-source",
                      type=click.Choice(["reference", "anchored"]),
                      default="reference", show_default=True,
                      help="Whose prediction level gates anchor switches.")(fn)
    return fn


@click.group()
def main():
    """Anchored learning-curve convergence thresholds."""


@main.command()
@click.argument("observations", type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", default="none", show_default=True,
              help="none | canonical | fixed:<beta> | fixed:<beta>+<lookahead>")
@click.option("--condition", type=click.Choice(["absolute", "relative"]),
              default="absolute", show_default=True)
@click.option("--tau", type=float, required=True, help="Proximity threshold.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON analysis report here.")
@click.option("--series", type=click.Path(dir_okay=False), default=None,
              help="Write the epsilon/PUT series CSV here.")
@_common_options
def analyze(observations, strategy, condition, tau, out, series, kernel, step,
            nu, slowdown, look_ahead, fit_tol, fit_max_iter, anchor_weight,
            plevel_source):
    """Stream a CSV of observations through a trace and report the stop
    decision.  Exits 0 when converged, 2 when not yet."""
    params = _params(nu, slowdown, look_ahead, fit_tol, fit_max_iter,
                     anchor_weight, plevel_source)
    strat = AnchoringStrategy.parse(strategy)
    cond = ProximityCondition(condition, tau)
    log = read_observations(observations, scheme=_scheme(kernel, step))
    trace = LearningTrace.from_log(log, strat, params)

    click.echo(f"observations: {len(log)}")
    click.echo(f"wlevel: {trace.wlevel}")
    click.echo(f"plevel: {trace.plevel} (reference={trace.plevel_reference}, "
               f"anchored={trace.plevel_anchored})")

    records = []
    eps_error = None
    try:
        records = epsilon_sequence(trace)
    except NotDecreasing as exc:
        eps_error = str(exc)
    except ConvergemaError as exc:
        eps_error = str(exc)

    stop = None
    if eps_error is None or cond.kind == "relative":
        try:
            stop = clevel(trace, cond)
        except NotDecreasing as exc:
            eps_error = str(exc)

    for entry in trace.backbone():
        click.echo(f"  level {entry.level:>4}  x {entry.x:>10}  "
                   f"alpha {entry.alpha:.6f}")
    if records:
        click.echo("epsilon sequence:")
        for rec in records:
            mark = " (rupture)" if rec.is_rupture else ""
            click.echo(f"  level {rec.level:>4}  eps {rec.epsilon:.6f}{mark}")

    report = {
        "strategy": strat.spec_string(),
        "condition": {"kind": cond.kind, "tau": cond.tau},
        "trace": trace.snapshot(),
        "epsilon": [
            {"level": r.level, "epsilon": r.epsilon, "is_rupture": r.is_rupture}
            for r in records
        ],
        "clevel": stop,
        "error": eps_error,
    }
    if out:
        write_json(report, out)
    if series:
        rows = []
        put_cond = cond if cond.kind == "absolute" else None
        for rec in records:
            put_val = ""
            if (put_cond is not None
                    and trace.strategy.kind in ("fixed", "fixed_look_ahead")
                    and trace.plevel is not None
                    and rec.level > trace.plevel + 1):
                try:
                    put_val = put(trace, put_cond, rec.level, records)
                except ConvergemaError:
                    put_val = ""
            rows.append({"level": rec.level, "epsilon": repr(rec.epsilon),
                         "is_rupture": int(rec.is_rupture), "put": put_val})
        write_series_csv(rows, ("level", "epsilon", "is_rupture", "put"), series)

    if eps_error is not None and stop is None and cond.kind == "absolute":
        click.echo(f"error: {eps_error}", err=True)
        click.echo("hint: use fixed anchoring for absolute thresholds", err=True)
        sys.exit(1)
    if stop is None:
        click.echo("not converged yet")
        sys.exit(2)
    click.echo(f"clevel: {stop}")


@main.command()
@click.argument("observations", type=click.Path(exists=True, dir_okay=False))
@click.option("--horizon", "horizon_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Oracle observation stream (a superset of OBSERVATIONS).")
@click.option("--tau", type=float, required=True, help="Absolute threshold.")
@click.option("--beta", type=float, default=100.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_common_options
def tune(observations, horizon_path, tau, beta, out, kernel, step, nu,
         slowdown, look_ahead, fit_tol, fit_max_iter, anchor_weight,
         plevel_source):
    """Sweep tentative PUT values (100 down to 0, step 10) and pick the
    look-ahead with the turning-point relative cost."""
    params = _params(nu, slowdown, look_ahead, fit_tol, fit_max_iter,
                     anchor_weight, plevel_source)
    scheme = _scheme(kernel, step)
    obs_log = read_observations(observations, scheme=scheme)
    hor_log = read_observations(horizon_path, scheme=scheme)
    for mine, oracle in zip(obs_log, hor_log):
        if (mine.level, mine.x) != (oracle.level, oracle.x):
            raise click.ClickException(
                "observations are not a prefix of the horizon stream")
    if len(obs_log) > len(hor_log):
        raise click.ClickException("horizon shorter than the observations")

    cond = ProximityCondition("absolute", tau)
    baseline = LearningTrace.from_log(hor_log, AnchoringStrategy.none(), params)
    base_stop = clevel(baseline, cond)
    if base_stop is None:
        raise click.ClickException("anchor-free baseline did not converge")
    result = find_optimal_look_ahead(hor_log, params, tau, beta, base_stop)

    click.echo(f"baseline clevel: {base_stop}")
    click.echo("zeta  lambda  clevel  rc")
    for cand in result.candidates:
        click.echo(f"{cand.zeta:>4.0f}  {cand.look_ahead!s:>6}  "
                   f"{cand.clevel!s:>6}  "
                   f"{'-' if cand.rc is None else format(cand.rc, '.4f')}")
    click.echo(f"selected look-ahead: {result.look_ahead} "
               f"(zeta {result.zeta:.0f}, PUT {result.put_at_switch:.2f}, "
               f"RC {result.rc:.4f})")
    if out:
        write_json({
            "baseline_clevel": base_stop,
            "selected": {"look_ahead": result.look_ahead, "zeta": result.zeta,
                         "put": result.put_at_switch, "rc": result.rc},
            "candidates": [
                {"zeta": c.zeta, "look_ahead": c.look_ahead,
                 "clevel": c.clevel, "rc": c.rc}
                for c in result.candidates
            ],
        }, out)


@main.command()
@click.argument("frame_spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_prefix", type=click.Path(), default=None,
              help="Write <prefix>.json and <prefix>.csv reports.")
@click.option("--error-target", type=click.Choice(["raw", "fitted"]),
              default="raw", show_default=True)
def evaluate(frame_spec, out_prefix, error_target):
    """Evaluate a local testing frame described by a JSON spec with keys:
    observations (CSV path), tau_r, strategies, conditions, and optional
    nu/slowdown/lambda/horizon_len/anchor_weight/plevel_source."""
    with open(frame_spec) as handle:
        raw = json.load(handle)
    for key in ("observations", "tau_r", "strategies"):
        if key not in raw:
            raise click.ClickException(f"frame spec missing key {key!r}")
    params = TraceParams(
        nu=raw.get("nu", 2e-5), slowdown=raw.get("slowdown", 1),
        look_ahead=raw.get("lambda", 5),
        anchor_weight=raw.get("anchor_weight", 1.0),
        plevel_source=raw.get("plevel_source", "reference"))
    spec = FrameSpec(
        tau_r=float(raw["tau_r"]),
        strategies=tuple(AnchoringStrategy.parse(s) for s in raw["strategies"]),
        conditions=tuple(raw.get("conditions", ("absolute", "relative"))),
        params=params,
        horizon_len=raw.get("horizon_len"),
        error_target=error_target)
    log = read_observations(raw["observations"])
    frame = build_frame(log, spec)

    def fmt(value, digits=6):
        return "" if value is None else f"{value:.{digits}f}"

    click.echo(f"tau_a (normalised): {frame.tau_a:.6f}")
    click.echo("strategy        condition  plevel  clevel  A^c      RC      RP^c     A^e      RP^e     PUT     lookahead")
    rows = frame.rows()
    for row in rows:
        click.echo(f"{row.strategy:<15} {row.condition:<9} "
                   f"{row.plevel!s:>6}  {row.clevel!s:>6}  "
                   f"{fmt(row.a_c, 2):>7}  {fmt(row.rc, 2):>6}  "
                   f"{fmt(row.rp_c, 2):>7}  {fmt(row.a_e, 2):>7}  "
                   f"{fmt(row.rp_e, 2):>7}  {fmt(row.put, 2):>6}  "
                   f"{row.look_ahead!s:>9}")
    if out_prefix:
        payload = {
            "tau_a": frame.tau_a,
            "tau_r": spec.tau_r,
            "baseline": {"strategy": frame.baseline.strategy.spec_string(),
                         "condition": frame.baseline.condition.kind,
                         "clevel": frame.baseline.clevel},
            "rows": [vars(r) for r in rows],
        }
        write_json(payload, f"{out_prefix}.json")
        write_series_csv(
            [{k: ("" if v is None else v) for k, v in vars(r).items()}
             for r in rows],
            ("strategy", "condition", "tau", "plevel", "clevel", "a_c", "a_e",
             "rc", "rp_c", "rp_e", "put", "look_ahead", "note"),
            f"{out_prefix}.csv")


@main.command()
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Observation CSV to write.")
def simulate(spec_path, out):
    """Generate a synthetic observation stream from a JSON generator spec
    with keys a, b, c, levels and optional kernel/step/noise_sd/
    perturbations/seed.  CONVERGEMA_SEED overrides the seed."""
    with open(spec_path) as handle:
        raw = json.load(handle)
    for key in ("a", "b", "c", "levels"):
        if key not in raw:
            raise click.ClickException(f"generator spec missing key {key!r}")
    seed = int(os.environ.get(SEED_ENV, raw.get("seed", 0)))
    scheme = LearningScheme.uniform(int(raw.get("kernel", 5000)),
                                    int(raw.get("step", 5000)))
    spec = GeneratorSpec(
        truth=PowerLawCurve(a=float(raw["a"]), b=float(raw["b"]),
                            c=float(raw["c"])),
        levels=int(raw["levels"]),
        scheme=scheme,
        noise_sd=float(raw.get("noise_sd", 0.0)),
        perturbations=tuple((int(lv), float(d))
                            for lv, d in raw.get("perturbations", [])),
        seed=seed)
    write_observations(generate(spec), out)
    click.echo(f"wrote {spec.levels} observations to {out}")


def _entry():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except (ConvergemaError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    _entry()
