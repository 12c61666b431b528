"""Command-line pipeline: simulate -> transform -> density -> compare/cluster/classify, plus validate.

Exit codes: 0 success, 2 configuration or input error, 3 violated
computational precondition, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._io import atomic_write_json, atomic_write_text
from .analysis import (
    LabeledDensities,
    average_linkage,
    cut_dendrogram,
    holdout_experiment,
    load_matrix,
    pairwise_l1,
    save_dendrogram,
)
from .dtm import dtm_signature, load_signature, save_signature
from .errors import ConfigError, DtmError, InputError
from .geometry import load_cloud, save_cloud
from .kde import Bandwidth, Kernel, bandwidth_select, kde_estimate, load_density, save_density
from .svg import clt_plot, density_plot
from .synth import ChromatinParams, RngSeed, simulate_chromatin
from .validate import CltExperiment, run_clt_experiment


class _Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _check_inputs(paths):
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"{p}: no such file")


def _mass(text, n):
    """Parse ``--m``: a number, a fraction like ``2/3``, or ``k/n``."""
    text = text.strip()
    try:
        if text.endswith("/n"):
            return int(text[:-2]) / n
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"invalid --m value {text!r}") from None


def _bandwidth_spec(text):
    if text.startswith("manual:"):
        try:
            return Bandwidth(float(text.split(":", 1)[1]), "manual")
        except ValueError:
            raise ConfigError(f"invalid manual bandwidth {text!r}") from None
    if text not in ("n5", "n54"):
        raise ConfigError(f"--bandwidth must be n5, n54 or manual:<h>, got {text!r}")
    return text


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid integer list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise ConfigError(f"expected positive integers, got {text!r}")
    return vals


def _outputs(inputs, out, suffix):
    """One output path per input: ``out`` itself for a single ``.csv`` target, else ``out/<stem><suffix>``."""
    out = Path(out)
    if len(inputs) == 1 and out.suffix == ".csv":
        return [out]
    return [out / (Path(p).stem.split(".")[0] + suffix) for p in inputs]


def _labels(args, count, paths):
    if args.labels is None:
        return [Path(p).stem.split(".")[0] for p in paths]
    labels = [s.strip() for s in args.labels.split(",")]
    if len(labels) != count:
        raise InputError(f"{len(labels)} labels given for {count} inputs")
    return labels


def cmd_transform(args):
    _check_inputs(args.inputs)
    for src, dst in zip(args.inputs, _outputs(args.inputs, args.out, ".dtm.csv")):
        try:
            cloud = load_cloud(src, args.format)
            m = _mass(args.m, cloud.n)
            sig = dtm_signature(cloud, m)
        except DtmError as exc:
            raise type(exc)(f"{src} (--m {args.m}): {exc}") from None
        save_signature(sig, dst)
        _log(f"transform: {src} -> {dst} (n={sig.n}, m={sig.m:.6g})")
    return 0


def cmd_density(args):
    _check_inputs(args.inputs)
    bw = _bandwidth_spec(args.bandwidth)
    kernel = Kernel(args.kernel)
    estimates = []
    for src, dst in zip(args.inputs, _outputs(args.inputs, args.out, ".density.csv")):
        try:
            sig = load_signature(src)
            h = bw if isinstance(bw, Bandwidth) else bandwidth_select(sig.values, bw)
            est = kde_estimate(sig.values, kernel, h, args.grid, source_id=sig.source_id)
        except DtmError as exc:
            raise type(exc)(f"{src} (--bandwidth {args.bandwidth}): {exc}") from None
        save_density(est, dst)
        estimates.append(est)
        _log(f"density: {src} -> {dst} (h={est.h.h:.6g}, integral={est.integral():.6f})")
    if args.svg:
        atomic_write_text(args.svg, density_plot(estimates))
    return 0


def _load_estimates(paths):
    _check_inputs(paths)
    return [load_density(p) for p in paths]


def cmd_compare(args):
    estimates = _load_estimates(args.inputs)
    labels = _labels(args, len(estimates), args.inputs)
    d = pairwise_l1(estimates, labels)
    text = d.to_csv()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_cluster(args):
    if args.matrix:
        _check_inputs([args.matrix])
        d = load_matrix(args.matrix)
    else:
        estimates = _load_estimates(args.inputs)
        d = pairwise_l1(estimates, _labels(args, len(estimates), args.inputs))
    dend = average_linkage(d)
    extra = {}
    if args.cut is not None:
        extra["assignment"] = [int(v) for v in cut_dendrogram(dend, args.cut)]
        extra["cut"] = args.cut
    out = Path(args.out)
    save_dendrogram(dend, out.with_suffix(".nwk"), out.with_suffix(".json"), extra)
    print(dend.to_newick())
    return 0


def cmd_classify(args):
    estimates = _load_estimates(args.inputs)
    if args.labels is None:
        raise ConfigError("classify needs --labels")
    labels = _labels(args, len(estimates), args.inputs)
    data = LabeledDensities(estimates, labels)
    matrix = pairwise_l1(estimates, labels)
    report = []
    for k in _int_list(args.k):
        rate = holdout_experiment(data, args.train_frac, k, args.reps, args.seed, matrix=matrix)
        report.append({"k": k, "train_fraction": args.train_frac, "reps": args.reps, "rate": rate})
        _log(f"classify: k={k} rate={rate:.4f}")
    if args.out:
        atomic_write_json(args.out, report)
    else:
        print(json.dumps(report, indent=2))
    return 0


def cmd_simulate(args):
    _check_inputs([args.config])
    params = ChromatinParams.from_json(args.config)
    if args.count < 1:
        raise ConfigError("--count must be positive")
    out = Path(args.out)
    ext = "xyz" if args.format == "xyz" else "csv"
    clouds = []
    for i in range(args.count):
        stream = args.first_stream + i
        fiber = simulate_chromatin(params, RngSeed(args.seed, stream))
        name = f"fiber_{stream:05d}.{ext}"
        save_cloud(fiber.noisy, out / name, args.format)
        entry = {"file": name, "seed": args.seed, "stream": stream, "loop_count": fiber.loop_count,
                 "n_points": fiber.noisy.n}
        if args.backbone:
            bname = f"backbone_{stream:05d}.{ext}"
            save_cloud(fiber.backbone, out / bname, args.format)
            entry["backbone"] = bname
        clouds.append(entry)
        _log(f"simulate: {name} ({fiber.loop_count} loops)")
    atomic_write_json(out / "manifest.json", {"params": params.to_dict(), "seed": args.seed, "clouds": clouds})
    return 0


def cmd_validate(args):
    _check_inputs([args.experiment])
    exp = CltExperiment.from_json(args.experiment)
    step = max(1, exp.reps // 10)

    def progress(done, total):
        if done % step == 0 or done == total:
            _log(f"validate: {done}/{total} repetitions")

    result = run_clt_experiment(exp, progress)
    if args.out:
        result.save_json(args.out)
    if args.csv:
        result.save_csv(args.csv)
    if args.svg:
        atomic_write_text(args.svg, clt_plot(result))
    print(result.summary())
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dtmsig", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transform", help="point clouds -> DTM signatures")
    t.add_argument("inputs", nargs="+")
    t.add_argument("--m", required=True, help="mass in (0, 1]; also accepts 2/3 or k/n")
    t.add_argument("--format", choices=("csv", "xyz"), default=None)
    t.add_argument("--out", default=".")
    t.set_defaults(func=cmd_transform)

    d = sub.add_parser("density", help="DTM signatures -> kernel density estimates")
    d.add_argument("inputs", nargs="+")
    d.add_argument("--kernel", choices=("biweight", "gaussian"), default="biweight")
    d.add_argument("--bandwidth", default="n5", help="n5, n54 or manual:<h>")
    d.add_argument("--grid", type=int, default=512)
    d.add_argument("--out", default=".")
    d.add_argument("--svg", default=None)
    d.set_defaults(func=cmd_density)

    c = sub.add_parser("compare", help="pairwise L1 distance matrix")
    c.add_argument("inputs", nargs="+")
    c.add_argument("--labels", default=None, help="comma-separated, one per input")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)

    cl = sub.add_parser("cluster", help="average-linkage dendrogram (Newick + JSON)")
    cl.add_argument("inputs", nargs="*")
    cl.add_argument("--matrix", default=None, help="distance matrix CSV instead of densities")
    cl.add_argument("--labels", default=None)
    cl.add_argument("--cut", type=int, default=None, help="also report a flat clustering into this many groups")
    cl.add_argument("--out", required=True, help="output prefix; writes .nwk and .json")
    cl.set_defaults(func=cmd_cluster)

    k = sub.add_parser("classify", help="stratified hold-out k-NN misclassification rate")
    k.add_argument("inputs", nargs="+")
    k.add_argument("--labels", default=None)
    k.add_argument("--k", default="1,3,5")
    k.add_argument("--train-frac", type=float, default=0.1)
    k.add_argument("--reps", type=int, default=100)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_classify)

    s = sub.add_parser("simulate", help="simulate noisy chromatin fibres")
    s.add_argument("config", help="JSON file with ChromatinParams fields")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--first-stream", type=int, default=0)
    s.add_argument("--format", choices=("csv", "xyz"), default="csv")
    s.add_argument("--backbone", action="store_true", help="also write noise-free backbones")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="Monte Carlo pointwise CLT experiment")
    v.add_argument("experiment", help="JSON file with CltExperiment fields")
    v.add_argument("--out", default=None)
    v.add_argument("--csv", default=None)
    v.add_argument("--svg", default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "cluster" and not args.matrix and len(args.inputs) < 2:
        parser.error("cluster needs at least two density files or --matrix")
    try:
        return args.func(args)
    except DtmError as exc:
        _log(f"dtmsig {args.command}: error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _log(f"dtmsig {args.command}: I/O error: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
