"""``rtrd`` command line: decompose, sweep, compress, denoise, reconstruct, metrics.

Exit codes: 0 success, 2 argument error, 3 data-format error, 4 numerical failure.
"""

import argparse
import logging
import sys

from . import bench, datasets
from .ring import read_trng, reconstruct_full
from .solvers import DivergenceError, rse
from .tensor import FormatError, frobenius_norm, read_dten, write_dten

EXIT_ARGS = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4

DEFAULT_SIZES = "25,50,75,100,125,150,175,200"


class UsageError(Exception):
    pass


def int_list(text):
    try:
        values = [int(v) for v in text.replace("x", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return tuple(values)


def method_list(text):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in methods:
        if m not in bench.METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {', '.join(bench.METHODS)}")
    return methods


def noise_list(text):
    out = []
    for item in text.split(","):
        item = item.strip().lower().removesuffix("db")
        if item == "none":
            out.append(None)
        else:
            try:
                out.append(float(item))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad SNR {item!r}") from None
    return out


def _solver_flags(p, method_default="rtrals"):
    p.add_argument("--method", default=method_default, choices=bench.METHODS)
    p.add_argument("--ranks", type=int_list, help="TR ranks r1,r2,... (ALS/SGD methods)")
    p.add_argument("--tol", type=float, help="tolerance (SVD target error / ALS stop); "
                                             "default 0.15 for SVD methods, 1e-6 otherwise")
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--proj", type=int_list, help="sketch sizes k1,k2,... (randomized methods)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sgd-step", type=float, default=0.05)
    p.add_argument("--sgd-batch", type=int, default=16)
    p.add_argument("--restarts", type=int, default=1, help="independent ALS starts, best kept")
    p.add_argument("--out", help="write CSV here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="rtrd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="decompose one DTEN tensor")
    p.add_argument("--input", required=True)
    _solver_flags(p)
    p.add_argument("--save-factors", help="write factors as TRNG")

    p = sub.add_parser("sweep", help="projection-size sweep on an RGB image")
    p.add_argument("--input", default="sample",
                   help="image file, DTEN cube, or 'sample' for the bundled 1024x1024x3 photo")
    p.add_argument("--sizes", type=int_list, default=int_list(DEFAULT_SIZES))
    p.add_argument("--methods", type=method_list, default=("trals", "trsvd", "rtrals", "rtrsvd"))
    _solver_flags(p)
    p.add_argument("--svd-tol", type=float, default=0.15)

    p = sub.add_parser("compress", help="compress a dataset tensor")
    p.add_argument("--dataset", required=True, choices=("cifar10", "coil100", "dten"))
    p.add_argument("--path", required=True)
    p.add_argument("--limit", type=int, help="use only the first N CIFAR-10 images")
    _solver_flags(p)
    p.add_argument("--save-factors", help="write factors as TRNG")

    p = sub.add_parser("denoise", help="noisy reconstruction of a third-order cube")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="DTEN cube")
    src.add_argument("--synthetic", type=int_list, help="generate a low-TR-rank cube of this shape")
    p.add_argument("--synthetic-ranks", type=int_list, default=(3, 3, 3))
    p.add_argument("--snr", type=noise_list, default=noise_list("none,20,10,0"),
                   help="comma list of SNR levels in dB, or 'none'")
    p.add_argument("--methods", type=method_list, default=("rtrals", "rtrsvd"))
    _solver_flags(p)
    p.add_argument("--svd-tol", type=float, default=0.15)
    p.add_argument("--dump-dir", help="write reconstructed bands as PGM here")

    p = sub.add_parser("reconstruct", help="expand TRNG factors into a DTEN tensor")
    p.add_argument("--factors", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("metrics", help="RSE between two DTEN tensors")
    p.add_argument("--ref", required=True)
    p.add_argument("--approx", required=True)
    return parser


def _config(args, method=None, tol=None):
    method = method or args.method
    needs_ranks = method in ("trals", "rtrals", "trsgd")
    if needs_ranks and args.ranks is None:
        raise UsageError(f"--ranks is required for {method}")
    return bench.default_config(
        method,
        ranks=args.ranks if needs_ranks else None,
        tol=args.tol if tol is None else tol,
        max_sweeps=args.max_sweeps,
        seed=args.seed,
        sgd_step=args.sgd_step,
        sgd_batch=args.sgd_batch,
        restarts=args.restarts,
    )


def _check_lengths(args, order):
    if args.ranks is not None and len(args.ranks) != order:
        raise UsageError(f"--ranks has {len(args.ranks)} entries, tensor has order {order}")
    if args.proj is not None and len(args.proj) != order:
        raise UsageError(f"--proj has {len(args.proj)} entries, tensor has order {order}")


def _emit(records, args):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench.write_csv(records, fh)
    else:
        bench.write_csv(records, sys.stdout)


def cmd_decompose(args):
    x = read_dten(args.input)
    _check_lengths(args, x.ndim)
    cfg = _config(args)
    rec = bench.compress_dataset(x, args.method, cfg, dataset=args.input,
                                 sketch_dims=args.proj, save_factors=args.save_factors)
    _emit([rec], args)


def cmd_sweep(args):
    x = datasets.sample_image() if args.input == "sample" else datasets.load_image(args.input)
    if args.ranks is None:
        args.ranks = (10,) * x.ndim
    _check_lengths(args, x.ndim)
    cfg = _config(args, method="trals")
    svd_cfg = _config(args, method="trsvd", tol=args.svd_tol)
    records = bench.sweep_projection(x, args.sizes, args.methods, cfg, dataset=args.input,
                                     tsvd_cfg=svd_cfg)
    _emit(records, args)


def cmd_compress(args):
    x = datasets.load_dataset(args.dataset, args.path, limit=args.limit)
    _check_lengths(args, x.ndim)
    cfg = _config(args)
    rec = bench.compress_dataset(x, args.method, cfg, dataset=args.dataset,
                                 sketch_dims=args.proj, save_factors=args.save_factors)
    _emit([rec], args)


def cmd_denoise(args):
    if args.input:
        cube, name = read_dten(args.input), args.input
    else:
        cube = datasets.synthetic_tr_tensor(args.synthetic, args.synthetic_ranks, seed=args.seed)
        name = "synthetic"
    _check_lengths(args, cube.ndim)
    if args.ranks is None:
        args.ranks = tuple(args.synthetic_ranks) if not args.input else (10,) * cube.ndim
    cfg = _config(args, method="trals")
    svd_cfg = _config(args, method="trsvd", tol=args.svd_tol)
    noises = [bench.NoiseSpec(s, seed=args.seed) for s in args.snr]
    records = bench.denoise_hsi(cube, noises, args.methods, cfg, sketch_dims=args.proj,
                                dataset=name, dump_dir=args.dump_dir, tsvd_cfg=svd_cfg)
    _emit(records, args)


def cmd_reconstruct(args):
    write_dten(args.output, reconstruct_full(read_trng(args.factors)))


def cmd_metrics(args):
    ref, approx = read_dten(args.ref), read_dten(args.approx)
    if ref.shape != approx.shape:
        raise FormatError(f"shape mismatch: {ref.shape} vs {approx.shape}")
    print("rse,ref_norm,approx_norm")
    print(f"{rse(ref, approx)!r},{frobenius_norm(ref)!r},{frobenius_norm(approx)!r}")


COMMANDS = {
    "decompose": cmd_decompose,
    "sweep": cmd_sweep,
    "compress": cmd_compress,
    "denoise": cmd_denoise,
    "reconstruct": cmd_reconstruct,
    "metrics": cmd_metrics,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rtrd: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"rtrd: data error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DivergenceError, FloatingPointError) as exc:
        print(f"rtrd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rtrd: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return 0


if __name__ == "__main__":
    sys.exit(main())
