"""Command-line pipeline: fit, simulate, forecast, validate, aggregate-ncep.

Exit codes: 0 success, 1 input or configuration error, 2 model
non-convergence. Every JSON report embeds the resolved options and a
SHA-256 digest of each input file.
"""

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import bootstrap, data, diagnostics, forecast, model, solver
from .errors import Pm25CastError

CLI_FAMILIES = ("initial", "with-id", "iterated", "iterated-free-rho")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; 2 is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_echo(args, input_paths):
    options = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("func",) and not callable(value)
    }
    return {
        "command": args.command,
        "options": {k: (str(v) if isinstance(v, Path) else v) for k, v in options.items()},
        "inputs": {str(p): _sha256(p) for p in input_paths},
    }


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _parse_start(text, q):
    values = [float(v) for v in text.split(",")]
    if len(values) != q:
        raise ValueError(f"--start needs {q} comma-separated values, got {len(values)}")
    return np.array(values)


def _make_spec(args):
    if args.family == "iterated":
        if args.rho is None:
            raise ValueError("--rho is required for the iterated family")
        return model.ModelSpec("iterated", rho=args.rho)
    if args.rho is not None:
        raise ValueError("--rho only applies to the iterated family")
    return model.ModelSpec(args.family)


def _load_frame(path):
    records = data.parse_observations(path)
    frame = data.build_frame(records)
    if frame.n == 0:
        raise Pm25CastError("no usable rows after filtering")
    return frame


def _fit_with_diagnostics(spec, frame, args):
    theta0 = _parse_start(args.start, spec.q) if args.start else None
    fit = solver.gauss_newton(
        spec, frame, theta0=theta0, max_steps=args.max_steps, rel_tol=args.rel_tol
    )
    v1 = model.jacobian(spec, fit.theta, frame)
    v2 = model.hessian_cube(spec, fit.theta, frame)
    curv = diagnostics.bates_curvature(v1, v2, fit.sigma_hat, alpha=args.alpha)
    bias = diagnostics.box_bias(v1, v2, fit.sigma_hat, fit.theta)
    resid = diagnostics.residual_screen(fit, frame, alpha=args.alpha)
    return fit, curv, bias, resid


def _fit_summary(fit, frame):
    return {
        "family": fit.spec.family,
        "rho": fit.spec.rho,
        "theta": [float(v) for v in fit.theta],
        "rss": fit.rss,
        "sigma_hat": fit.sigma_hat,
        "converged": fit.converged,
        "steps": fit.steps,
        "n_observations": int(fit.residuals.size),
        "rows_dropped": [[d.isoformat(), reason] for d, reason in frame.drop_log],
    }


def cmd_fit(args):
    frame = _load_frame(args.obs)
    spec = _make_spec(args)
    fit, curv, bias, resid = _fit_with_diagnostics(spec, frame, args)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solver.write_trace_csv(fit, out / "fit_trace.csv")
    idx = model.rows_used(spec, frame)
    with open(out / "residuals.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "fitted", "residual", "std_residual"])
        for i in range(idx.size):
            writer.writerow(
                [str(frame.dates[idx[i]])]
                + [
                    repr(float(v))
                    for v in (fit.fitted[i], fit.residuals[i], fit.std_residuals[i])
                ]
            )
    report = {
        "config": _config_echo(args, [args.obs]),
        "fit": _fit_summary(fit, frame),
    }
    report.update(diagnostics.diagnostics_report(curv, bias, resid))
    _write_json(report, out / "diagnostics.json")
    if not fit.converged:
        print("fit did not converge", file=sys.stderr)
        return 2
    return 0


def cmd_simulate(args):
    frame = _load_frame(args.obs)
    spec = _make_spec(args)
    theta0 = _parse_start(args.start, spec.q) if args.start else None
    baseline = solver.gauss_newton(spec, frame, theta0=theta0)
    if not baseline.converged:
        print("baseline fit did not converge", file=sys.stderr)
        return 2
    summary = bootstrap.run_simulation(
        spec,
        frame,
        baseline,
        reps=args.reps,
        size=args.size,
        seed=args.seed,
        workers=args.workers,
        with_replacement=args.with_replacement,
        alpha=args.alpha,
        theta0=theta0,
        min_ks_pass=args.min_ks_pass,
    )
    correction = bootstrap.apply_correction(baseline, summary, spec, frame, alpha=args.alpha)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bootstrap.write_replications_csv(summary, out / "replications.csv")
    payload = bootstrap.summary_dict(summary)
    payload["baseline"] = _fit_summary(baseline, frame)
    payload["corrected"] = {
        "theta": [float(v) for v in correction.fit.theta],
        "rss_model_scale": correction.fit.rss,
        "rss_observation_before": correction.rss_observation_before,
        "rss_observation_after": correction.rss_observation_after,
        "curvature": {
            "rho_k_n": correction.curvature.rho_k_n,
            "rho_k_p": correction.curvature.rho_k_p,
            "critical": correction.curvature.critical,
            "planar_ok": correction.curvature.planar_ok,
            "uniform_ok": correction.curvature.uniform_ok,
        },
    }
    payload["config"] = _config_echo(args, [args.obs])
    _write_json(payload, out / "simulation.json")
    return 0


def _load_frozen_model(name_or_path):
    if name_or_path in forecast.PRESETS:
        return forecast.PRESETS[name_or_path]
    return forecast.FrozenModel.from_json(name_or_path)


def cmd_forecast(args):
    frozen = _load_frozen_model(args.model)
    profile = forecast.PROFILES[args.profile]
    records = data.parse_observations(args.obs)
    pm_by_date = {rec.date: rec.pm for rec in records if rec.pm is not None}
    ep_by_date = {rec.date: rec.ep for rec in records if rec.ep is not None}
    inputs = [args.obs]

    skipped = []
    if args.predictors == "ncep":
        if args.ncep is None:
            raise ValueError("--ncep is required unless --predictors observed")
        days = [data.aggregate_ncep(day) for day in data.parse_ncep(args.ncep)]
        dated, skipped_join = forecast.predictors_from_aggregated(days, ep_by_date)
        skipped.extend(skipped_join)
        inputs.append(args.ncep)
    else:
        dated, skipped_rec = forecast.predictors_from_records(records)
        skipped.extend(skipped_rec)

    id_source = {"1": "algo1", "2": "algo2", "observed": "observed"}[args.id_algo]
    rows, skipped_fc = forecast.forecast_series(
        frozen,
        dated,
        profile,
        id_source=id_source,
        prev_pm_by_date=pm_by_date,
        pm_by_date=pm_by_date,
    )
    skipped.extend(skipped_fc)
    for date, reason in skipped:
        print(f"skipped {date}: {reason}", file=sys.stderr)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forecast.write_forecast_csv(rows, out / "forecast.csv")
    _write_json(
        {
            "config": _config_echo(args, inputs),
            "rows": len(rows),
            "skipped": [[d.isoformat(), reason] for d, reason in skipped],
        },
        out / "forecast_meta.json",
    )
    return 0


def cmd_validate(args):
    rows = forecast.read_forecast_csv(args.forecast)
    records = data.parse_observations(args.obs)
    pm_by_date = {rec.date: rec.pm for rec in records if rec.pm is not None}
    report = forecast.inclusion_report(rows, pm_by_date)
    report["config"] = _config_echo(args, [args.forecast, args.obs])
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(report, out / "validation.json")
    return 0


def cmd_aggregate_ncep(args):
    days = [data.aggregate_ncep(day) for day in data.parse_ncep(args.ncep)]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data.write_aggregated_csv(days, out / "ncep_daily.csv")
    return 0


def _add_fit_options(parser):
    parser.add_argument("--family", choices=CLI_FAMILIES, default="with-id")
    parser.add_argument("--rho", type=float, default=None)
    parser.add_argument("--start", default=None, help="comma-separated starting theta")
    parser.add_argument("--rel-tol", type=float, default=1e-8)
    parser.add_argument("--max-steps", type=int, default=50)
    parser.add_argument("--alpha", type=float, default=0.05)


def build_parser():
    parser = _Parser(prog="pm25cast")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit a family and write diagnostics")
    p_fit.add_argument("obs", help="observation CSV")
    _add_fit_options(p_fit)
    p_fit.add_argument("--out-dir", default=".")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="resampling study and bias correction")
    p_sim.add_argument("obs", help="observation CSV")
    _add_fit_options(p_sim)
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--size", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--with-replacement", action="store_true")
    p_sim.add_argument("--min-ks-pass", type=float, default=0.95)
    p_sim.add_argument("--out-dir", default=".")
    p_sim.set_defaults(func=cmd_simulate)

    p_fc = sub.add_parser("forecast", help="daily interval forecasts")
    p_fc.add_argument("--ncep", default=None, help="six-hourly forecast CSV")
    p_fc.add_argument("--obs", required=True, help="observation CSV (ep and pm)")
    p_fc.add_argument("--model", default="thesis-2018", help="preset name or coefficients JSON")
    p_fc.add_argument("--id-algo", choices=("1", "2", "observed"), default="1")
    p_fc.add_argument("--profile", choices=sorted(forecast.PROFILES), default="ncep-i1")
    p_fc.add_argument("--predictors", choices=("ncep", "observed"), default="ncep")
    p_fc.add_argument("--out-dir", default=".")
    p_fc.set_defaults(func=cmd_forecast)

    p_val = sub.add_parser("validate", help="inclusion rates of a forecast table")
    p_val.add_argument("forecast", help="forecast CSV")
    p_val.add_argument("obs", help="observation CSV")
    p_val.add_argument("--out-dir", default=".")
    p_val.set_defaults(func=cmd_validate)

    p_agg = sub.add_parser("aggregate-ncep", help="collapse six-hourly rows to daily")
    p_agg.add_argument("ncep", help="six-hourly forecast CSV")
    p_agg.add_argument("--out-dir", default=".")
    p_agg.set_defaults(func=cmd_aggregate_ncep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (Pm25CastError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
