"""Command-line interface.

Subcommands: fit, predict, demodulate, filter, psd, reconstruct, sparse-fit,
experiment.  Observations come in as ``time,value`` CSV, models as the kernel
JSON (plus ``noise_var``); outputs are CSVs and metrics JSON under
``--out-dir``.  Set ``BLGP_LOG`` (debug/info/warning/error) for verbosity.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import experiments
from .bandpass import Band, bandpass_posterior, brick_wall
from .datasets import load_csv, write_csv, write_posterior_csv
from .demod import demodulate
from .errors import NumericalError, ValidationError
from .gp import GPModel, posterior
from .kernels import (
    CentredSincKernel,
    SincKernel,
    SincParams,
    SpectralMixtureKernel,
)
from .sparse import nyquist_inducing, sparse_posterior
from .spectral import periodogram, support_estimate
from .training import TrainingConfig, fit, write_trace_csv

logger = logging.getLogger("blgp")


def _setup_logging():
    level = os.environ.get("BLGP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_band(text) -> Band:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"--band expects 'a,b', got {text!r}")
    return Band(a, b)


def _parse_query(args, obs):
    if args.query is not None:
        try:
            start, stop, count = args.query.split(":")
            return np.linspace(float(start), float(stop), int(count))
        except ValueError:
            raise ValidationError(f"--query expects 'start:stop:count', got {args.query!r}")
    pad = 0.15 * obs.span
    return np.linspace(obs.times[0], obs.times[-1] + pad, 500)


def _load_model(path) -> GPModel:
    try:
        with open(path) as fh:
            return GPModel.from_json_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read model {path}: {exc}")


def _save_model(path, model: GPModel):
    with open(path, "w") as fh:
        json.dump(model.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _save_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(args):
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _template(name):
    templates = {
        "centred-sinc": CentredSincKernel(1.0, 1.0),
        "sinc": SincKernel(SincParams(1.0, 1.0, 1.0)),
        "sm": SpectralMixtureKernel(1.0, 1.0, 0.01),
    }
    if name not in templates:
        raise ValidationError(f"--kernel must be one of {sorted(templates)}")
    return templates[name]


def cmd_fit(args):
    obs = load_csv(args.input)
    out = _ensure_out(args)
    config = TrainingConfig(optimizer=args.optimizer, max_iters=args.max_iters,
                            restarts=args.restarts)
    result = fit(obs, GPModel(_template(args.kernel), 0.1), config)
    _save_model(os.path.join(out, "model.json"), result.model)
    write_trace_csv(result.trace, os.path.join(out, "trace.csv"))
    if result.warning:
        logger.warning("fit returned a best-effort model (all restarts failed)")
    print(json.dumps(result.model.to_json_dict()))
    return 0


def cmd_predict(args):
    obs = load_csv(args.input)
    model = _load_model(args.model)
    query = _parse_query(args, obs)
    post = posterior(model, obs, query)
    out = _ensure_out(args)
    write_posterior_csv(os.path.join(out, "posterior.csv"), post)
    print(os.path.join(out, "posterior.csv"))
    return 0


def cmd_demodulate(args):
    obs = load_csv(args.input)
    if args.carrier is None or args.bandwidth is None:
        raise ValidationError("demodulate requires --carrier and --bandwidth")
    sigma2 = args.sigma2 if args.sigma2 is not None else float(np.var(obs.values))
    noise_var = args.noise_var if args.noise_var is not None else 0.1 * float(np.var(obs.values))
    params = SincParams(sigma2, args.carrier, args.bandwidth)
    query = _parse_query(args, obs)
    ch1, ch2 = demodulate(obs, params, noise_var, query)
    out = _ensure_out(args)
    write_posterior_csv(os.path.join(out, "channel_1.csv"), ch1)
    write_posterior_csv(os.path.join(out, "channel_2.csv"), ch2)
    margin = 2.0 / args.bandwidth
    metrics = {"rmse_ch1": None, "rmse_ch2": None, "margin": margin}
    if args.truth_channels:
        import csv as _csv

        with open(args.truth_channels, newline="") as fh:
            reader = _csv.reader(fh)
            next(reader)
            rows = np.array([[float(v) for v in row] for row in reader])
        sel = (query >= query.min() + margin) & (query <= query.max() - margin)
        for i, (ch, key) in enumerate(((ch1, "rmse_ch1"), (ch2, "rmse_ch2"))):
            truth = np.interp(query, rows[:, 0], rows[:, 1 + i])
            metrics[key] = float(np.sqrt(np.mean((ch.mean[sel] - truth[sel]) ** 2)))
    _save_json(os.path.join(out, "metrics.json"), metrics)
    print(json.dumps(metrics))
    return 0


def cmd_filter(args):
    obs = load_csv(args.input)
    band = _parse_band(args.band)
    if args.model:
        model = _load_model(args.model)
    else:
        logger.info("no model given: fitting a sum-of-sinc source before filtering")
        model = experiments.fit_band_source(obs, {})
    noise_var = args.noise_var if args.noise_var is not None else model.noise_var
    query = _parse_query(args, obs)
    post = bandpass_posterior(obs, model.kernel, band, noise_var, query)
    estimate = brick_wall(obs, band, query)
    out = _ensure_out(args)
    write_posterior_csv(os.path.join(out, "band_posterior.csv"), post)
    write_csv(os.path.join(out, "brick_wall.csv"), ["t", "estimate"], zip(query, estimate))
    _save_model(os.path.join(out, "model.json"), model)
    print(os.path.join(out, "band_posterior.csv"))
    return 0


def cmd_psd(args):
    obs = load_csv(args.input)
    psd = periodogram(obs)
    out = _ensure_out(args)
    write_csv(os.path.join(out, "psd.csv"), ["frequency", "power"],
              zip(psd.frequencies, psd.power))
    bands = support_estimate(psd, args.threshold)
    _save_json(os.path.join(out, "support.json"),
               [{"a": b.a, "b": b.b} for b in bands])
    print(os.path.join(out, "psd.csv"))
    return 0


def cmd_sparse_fit(args):
    obs = load_csv(args.input)
    if args.model:
        model = _load_model(args.model)
    else:
        result = fit(obs, GPModel(_template(args.kernel), 0.1),
                     TrainingConfig(max_iters=args.max_iters))
        model = result.model
    inducing = nyquist_inducing(model.kernel, (obs.times[0], obs.times[-1]))
    query = _parse_query(args, obs)
    import time as _time

    t0 = _time.perf_counter()
    exact = posterior(model, obs, query)
    t1 = _time.perf_counter()
    sparse = sparse_posterior(obs, model.kernel, model.noise_var, inducing, query)
    t2 = _time.perf_counter()
    out = _ensure_out(args)
    write_csv(os.path.join(out, "inducing.csv"), ["location"],
              ((x,) for x in inducing.locations))
    write_posterior_csv(os.path.join(out, "posterior_sparse.csv"), sparse)
    write_posterior_csv(os.path.join(out, "posterior_exact.csv"), exact)
    std = max(float(np.std(obs.values)), 1e-12)
    report = {
        "M": len(inducing),
        "n": len(obs),
        "rmse_vs_exact": float(np.sqrt(np.mean((sparse.mean - exact.mean) ** 2))) / std,
        "runtime_exact": t1 - t0,
        "runtime_sparse": t2 - t1,
    }
    _save_json(os.path.join(out, "report.json"), report)
    print(json.dumps(report))
    return 0


def cmd_reconstruct(args):
    config = experiments.ExperimentConfig(
        experiment="reconstruct", out_dir=args.out_dir, seed=args.seed,
        data=args.input, model=args.model, subsample=args.subsample,
        noise_fraction=args.noise_frac,
    )
    payload = experiments.run_experiment(config)
    print(json.dumps(payload["metrics"]))
    return 0


def cmd_experiment(args):
    options = json.loads(args.options) if args.options else {}
    config = experiments.ExperimentConfig(
        experiment=args.experiment, out_dir=args.out_dir, seed=args.seed,
        data=args.input, model=args.model, subsample=args.subsample,
        noise_fraction=args.noise_frac, options=options,
    )
    payload = experiments.run_experiment(config)
    print(json.dumps(payload["metrics"]))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="blgp",
                                     description="Band-limited GP modelling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, input_required=True):
        p.add_argument("--input", required=input_required, help="observations CSV (time,value)")
        p.add_argument("--out-dir", default="blgp-out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--query", default=None, help="query grid start:stop:count")

    p = sub.add_parser("fit", help="maximum-likelihood training")
    common(p)
    p.add_argument("--kernel", default="centred-sinc")
    p.add_argument("--optimizer", default="direction-set",
                   choices=["direction-set", "quasi-newton"])
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior mean/variance on a query grid")
    common(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("demodulate", help="posterior over stereo channels")
    common(p)
    p.add_argument("--carrier", type=float, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--noise-var", type=float, default=None)
    p.add_argument("--truth-channels", default=None,
                   help="optional CSV time,ch1,ch2 for error metrics")
    p.set_defaults(func=cmd_demodulate)

    p = sub.add_parser("filter", help="Bayesian band-pass filtering")
    common(p)
    p.add_argument("--band", required=True, help="band edges 'a,b'")
    p.add_argument("--model", default=None, help="model JSON (fitted when omitted)")
    p.add_argument("--noise-var", type=float, default=None)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("psd", help="periodogram and support estimate")
    common(p)
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("sparse-fit", help="Nyquist-spaced sparse prediction report")
    common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--kernel", default="centred-sinc")
    p.add_argument("--max-iters", type=int, default=300)
    p.set_defaults(func=cmd_sparse_fit)

    p = sub.add_parser("reconstruct", help="band-limited reconstruction experiment")
    common(p, input_required=False)
    p.add_argument("--model", default=None)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--noise-frac", type=float, default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("experiment", help="run a named experiment end to end")
    common(p, input_required=False)
    p.add_argument("--experiment", required=True,
                   choices=list(experiments.EXPERIMENTS))
    p.add_argument("--model", default=None)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--noise-frac", type=float, default=None)
    p.add_argument("--options", default=None, help="experiment options as JSON")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
