"""Compression ratio, RSE and time of each method on a dataset tensor.

With ``--cifar DIR`` or ``--coil DIR`` the real datasets are used (CIFAR-10 can
be cut down with ``--limit``); otherwise a synthetic low-TR-rank
32x32x3x2000 tensor with mild noise stands in.

    python scripts/table1_compression.py --cifar ~/data/cifar-10-batches-bin --limit 5000
"""

import argparse
import logging

from rtrd import bench, datasets
from rtrd.bench import NoiseSpec, add_noise


def load(args):
    if args.cifar:
        x = datasets.load_cifar10(args.cifar, limit=args.limit)
        return "cifar10", x
    if args.coil:
        return "coil100", datasets.load_coil100(args.coil)
    x = datasets.synthetic_tr_tensor((32, 32, 3, 2000), (6, 4, 3, 6), seed=args.seed)
    return "synthetic", add_noise(x, NoiseSpec(30, seed=args.seed))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--cifar")
    src.add_argument("--coil")
    p.add_argument("--limit", type=int)
    p.add_argument("--tol", type=float, default=0.15, help="SVD tolerance")
    p.add_argument("--ranks", default="6,4,3,6", help="ALS ranks (one per mode)")
    p.add_argument("--max-sweeps", type=int, default=20)
    p.add_argument("--shrink", type=float, default=0.5,
                   help="sketch size of the last mode as a fraction of its extent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="table1_compression.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    name, x = load(args)
    ranks = tuple(int(r) for r in args.ranks.split(","))
    if len(ranks) != x.ndim:
        p.error(f"--ranks needs {x.ndim} entries for a tensor of shape {x.shape}")
    # keep the pixel/channel modes, shrink the sample mode(s)
    dims = x.shape[:3] + tuple(max(1, int(round(args.shrink * i))) for i in x.shape[3:])
    records = []
    for method in ("trsvd", "rtrsvd", "trals", "rtrals"):
        cfg = bench.default_config(method, ranks=ranks if "als" in method else None,
                                   tol=args.tol if "svd" in method else None,
                                   max_sweeps=args.max_sweeps, seed=args.seed)
        rec = bench.compress_dataset(x, method, cfg, dataset=name,
                                     sketch_dims=dims if method.startswith("r") else None)
        print(f"{method:7s} rse {rec.rse:.4f}  cr {rec.cr:8.2f}  {rec.elapsed_seconds:7.2f}s  ranks {rec.ranks}")
        records.append(rec)
    with open(args.out, "w", newline="") as fh:
        bench.write_csv(records, fh)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
