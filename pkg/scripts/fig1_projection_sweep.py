"""Projection-size sweep on a 1024x1024x3 RGB image (TR-rank 10,10,10).

Writes one CSV row per (size, method) and prints the rTRALS/TRALS speedups.

    python scripts/fig1_projection_sweep.py --out results/fig1.csv
"""

import argparse
import logging

from rtrd import bench, datasets


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--image", help="RGB image file; defaults to the bundled sample photo")
    p.add_argument("--sizes", default="25,50,75,100,125,150,175,200")
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--svd-tol", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="fig1_projection_sweep.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    img = datasets.load_image(args.image) if args.image else datasets.sample_image()
    sizes = [int(s) for s in args.sizes.split(",")]
    cfg = bench.default_config("trals", ranks=(args.rank,) * 3, seed=args.seed)
    svd_cfg = bench.default_config("trsvd", tol=args.svd_tol, seed=args.seed)
    recs = bench.sweep_projection(img, sizes, ("trals", "trsvd", "rtrals", "rtrsvd"), cfg,
                                  dataset=args.image or "sample", tsvd_cfg=svd_cfg)
    with open(args.out, "w", newline="") as fh:
        bench.write_csv(recs, fh)

    by = {(r.method, r.sketch_dims[0]): r for r in recs}
    top = max(sizes)
    for det, rnd in (("trals", "rtrals"), ("trsvd", "rtrsvd")):
        d, r = by[(det, top)], by[(rnd, top)]
        print(f"K={top}: {rnd} rse {r.rse:.4f} in {r.elapsed_seconds:.2f}s, "
              f"{det} rse {d.rse:.4f} in {d.elapsed_seconds:.2f}s, "
              f"speedup {d.elapsed_seconds / r.elapsed_seconds:.1f}x")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
