"""Command-line entry point: ``splinesvm {train,predict,encode,kernel-grid,toy-gen}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Reports go to stdout, per-pass progress to stderr, artifacts to files.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import dataio, kernels
from .encoder import EmbeddingSpec, encode_dataset
from .solver import AdditiveModel, TrainConfig, classify_many, primal_objective, train_binary, train_ova
from .splinebasis import BSplineSpec

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = dict(family="spline", degree=1, bins=10, reg=1, terms=4)

log = logging.getLogger("splinesvm")


class UsageError(Exception):
    pass


def _atomic_write(path, write) -> None:
    """Call ``write(tmp_path)`` and move the result into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _add_embedding_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("embedding")
    g.add_argument("--family", choices=["spline", "fourier", "hermite"])
    g.add_argument("--degree", type=int, help="spline degree r (1-3, default 1)")
    g.add_argument("--bins", type=int, help="spline bins N (default 10)")
    g.add_argument("--reg", type=int, help="regularization order d (default 1)")
    g.add_argument("--terms", type=int, help="orthogonal basis terms M (default 4)")
    g.add_argument("--lo", type=float, help="spline range start for every dimension")
    g.add_argument("--hi", type=float, help="spline range end for every dimension")
    g.add_argument("--bias", type=float, default=1.0, help="bias feature value B (0 disables)")
    g.add_argument("--skip-zeros", action="store_true",
                   help="do not encode zero-valued inputs (approximation for histograms)")


def _embedding_options(args) -> dict:
    family = args.family or DEFAULTS["family"]
    spline_only = [f for f in ("degree", "bins", "lo", "hi") if getattr(args, f) is not None]
    if family != "spline" and spline_only:
        raise UsageError(f"--{spline_only[0]} only applies to --family spline")
    if family == "spline" and args.terms is not None:
        raise UsageError("--terms only applies to --family fourier/hermite")
    if (args.lo is None) != (args.hi is None):
        raise UsageError("--lo and --hi must be given together")
    if args.lo is not None and not args.hi > args.lo:
        raise UsageError("--hi must exceed --lo")
    opts = {k: (getattr(args, k) if getattr(args, k) is not None else v)
            for k, v in DEFAULTS.items()}
    opts["family"] = family
    if family == "spline":
        if opts["degree"] not in (1, 2, 3):
            raise UsageError("--degree must be 1, 2 or 3")
        if opts["bins"] < 1:
            raise UsageError("--bins must be positive")
        if opts["reg"] not in (0, 1, 2):
            raise UsageError("--reg must be 0, 1 or 2 for splines")
    else:
        if opts["terms"] < 1:
            raise UsageError("--terms must be positive")
        if opts["reg"] not in (1, 2):
            raise UsageError("--reg must be 1 or 2 for orthogonal bases")
    if not np.isfinite(args.bias):
        raise UsageError("--bias must be finite")
    return opts


def _build_spec(opts: dict, args, data) -> EmbeddingSpec:
    include_bias = args.bias != 0.0
    if opts["family"] == "spline" and args.lo is not None:
        D = data.n_dims
        return EmbeddingSpec.splines(np.full(D, args.lo), np.full(D, args.hi), opts["degree"],
                                     opts["bins"], opts["reg"], args.bias, include_bias,
                                     args.skip_zeros)
    return EmbeddingSpec.fit(data, opts["family"], opts["degree"], opts["bins"], opts["reg"],
                             opts["terms"], args.bias, include_bias, args.skip_zeros)


def _load(path, n_dims=None) -> dataio.LabeledDataset:
    if not Path(path).is_file():
        raise dataio.DataError(f"{path}: no such file")
    return dataio.read_svmlight(path, n_dims)


def _accuracy(model, data) -> float:
    return float(np.mean(classify_many(model, data.X) == data.y))


# -- subcommands -------------------------------------------------------------


def cmd_train(args) -> int:
    opts = _embedding_options(args)
    if args.C <= 0 or args.tol <= 0 or args.max_iters < 1 or args.jobs < 1:
        raise UsageError("--C and --tol must be positive, --max-iters and --jobs at least 1")
    cfg = TrainConfig(C=args.C, tol=args.tol, max_iter=args.max_iters, seed=args.seed,
                      mode=args.mode, report_objective=not args.no_progress)
    data = _load(args.data)
    if data.y is None:
        raise dataio.DataError(f"{args.data}: training data needs labels")
    test = _load(args.test, data.n_dims) if args.test else None
    spec = _build_spec(opts, args, data)

    t0 = time.perf_counter()
    classes = data.classes
    binary = set(classes.tolist()) <= {-1, 1}
    if binary:
        model = train_binary(data, spec, cfg)
        passes, objective = model.passes, primal_objective(model, data, cfg)
    else:
        model = train_ova(data, spec, cfg, jobs=args.jobs)
        passes = max(m.passes for m in model.models)
        objective = sum(
            primal_objective(m, dataio.LabeledDataset(data.X, np.where(data.y == c, 1, -1)), cfg)
            for c, m in zip(model.classes, model.models)
        )
    elapsed = time.perf_counter() - t0
    _atomic_write(args.output, lambda p: dataio.write_model(model, p))

    materialized = "yes (batch: encoded matrix held in memory)" if cfg.mode == "batch" else \
        "no (online: one example encoded at a time)"
    print(f"model: {args.output}")
    print(f"examples: {data.n_examples}  dims: {data.n_dims}  width: {spec.width}  "
          f"classes: {len(classes)}")
    print(f"passes: {passes}")
    print(f"objective: {objective:.10g}")
    print(f"time: {elapsed:.3f}s")
    print(f"encodings materialized: {materialized}")
    print(f"train accuracy: {_accuracy(model, data):.4f}")
    if test is not None and test.y is not None:
        print(f"test accuracy: {_accuracy(model, test):.4f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = dataio.read_model(args.model)
    spec = (model if isinstance(model, AdditiveModel) else model.models[0]).spec
    data = _load(args.data, spec.n_dims)
    scores = model.decision_function(data.X)
    labels = classify_many(model, data.X)
    if scores.ndim == 2:
        scores = scores.max(axis=1)
    lines = "".join(f"{int(c)} {format(float(s), '.17g')}\n" for c, s in zip(labels, scores))
    report = sys.stdout
    if args.output:
        _atomic_write(args.output, lambda p: Path(p).write_text(lines))
    else:
        sys.stdout.write(lines)
        report = sys.stderr
    if data.y is not None:
        print(f"accuracy: {float(np.mean(labels == data.y)):.4f}", file=report)
    return EXIT_OK


def cmd_encode(args) -> int:
    opts = _embedding_options(args)
    data = _load(args.data)
    spec = _build_spec(opts, args, data)
    M = encode_dataset(spec, data, embedded=not args.raw)
    _atomic_write(args.output, lambda p: dataio.write_svmlight((M, data.y), p))
    print(f"encoded {data.n_examples} examples into {spec.width} columns "
          f"({M.nnz} nonzeros): {args.output}")
    return EXIT_OK


def cmd_kernel_grid(args) -> int:
    if not 0 < args.step <= 0.5:
        raise UsageError("--step must lie in (0, 0.5]")
    if args.degree not in (1, 2, 3) or args.reg not in (0, 1, 2) or args.bins < 1:
        raise UsageError("need --degree in 1..3, --reg in 0..2 and positive --bins")
    spec = BSplineSpec(args.degree, args.bins, 0.0, 1.0, args.reg)
    grid = kernels.kernel_grid(spec, args.step)
    _atomic_write(args.output, lambda p: kernels.write_kernel_csv(grid, p))
    gap = np.abs(np.subtract.outer(grid.points, grid.points))
    off = gap >= args.degree / args.bins - 1e-12
    print(f"grid: {grid.points.size}x{grid.points.size} -> {args.output}")
    print(f"max |kmin - k| off-band (|x-y| >= r/N): {np.abs(grid.diff[off]).max():.3e}")
    print(f"max |kmin - k| overall: {np.abs(grid.diff).max():.3e}")
    return EXIT_OK


def cmd_toy_gen(args) -> int:
    if args.m < 1:
        raise UsageError("--m must be positive")
    data = dataio.gen_toy_circle(args.m, args.seed)
    _atomic_write(args.output, lambda p: dataio.write_svmlight(data, p))
    print(f"wrote {args.m} points ({int((data.y > 0).sum())} positive): {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splinesvm", description="Additive classifiers trained as linear SVMs on spline or orthogonal-basis embeddings.",
        epilog="exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an additive classifier")
    p.add_argument("data", help="training data (svmlight)")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--test", help="held-out svmlight file to report accuracy on")
    _add_embedding_flags(p)
    s = p.add_argument_group("solver")
    s.add_argument("--C", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=0.1)
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["online", "batch"], default="online")
    s.add_argument("--jobs", type=int, default=1, help="parallel one-vs-all classes")
    s.add_argument("--no-progress", action="store_true", help="skip per-pass objective lines")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a dataset with a trained model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("-o", "--output", help="predictions file (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("encode", help="write embedded features as svmlight")
    p.add_argument("data")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--raw", action="store_true", help="write phi(x) instead of D_d^-T phi(x)")
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("kernel-grid", help="spline kernel vs min kernel on [0,1]^2 as CSV")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--reg", type=int, default=1)
    p.add_argument("--step", type=float, default=0.1)
    p.set_defaults(func=cmd_kernel_grid)

    p = sub.add_parser("toy-gen", help="write the circle toy dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_toy_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"splinesvm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (dataio.DataError, dataio.ModelFormatError, OSError) as exc:
        print(f"splinesvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"splinesvm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # single-class data and similar contract violations on the input
        print(f"splinesvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
