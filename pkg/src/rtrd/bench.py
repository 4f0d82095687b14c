"""Benchmark harness: projection-size sweeps, dataset compression, noisy denoising.

Every run yields a :class:`RunRecord`; records serialize to a fixed-column CSV.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ring import compression_ratio, reconstruct_full, write_trng
from .rng import NOISE, philox
from .sketch import ProjectionSpec, rtrals, rtrsvd
from .solvers import SolverConfig, rse, trals, trsgd, trsvd
from .tensor import as_tensor, frobenius_norm

log = logging.getLogger(__name__)

CSV_COLUMNS = ("method", "dataset", "K", "ranks", "rse", "cr", "seconds", "seed")

DETERMINISTIC = ("trals", "trsvd", "trsgd")
RANDOMIZED = ("rtrals", "rtrsvd")
METHODS = DETERMINISTIC + RANDOMIZED
# identifiers kept for external baselines; no implementation here
RESERVED = ("rcpals", "rtucker", "rsvd")


@dataclass(frozen=True)
class RunRecord:
    method: str
    dataset: str
    sketch_dims: tuple
    ranks: tuple
    rse: float
    cr: float
    elapsed_seconds: float
    seed: int

    def __post_init__(self):
        if not self.rse >= 0:
            raise ValueError(f"rse must be >= 0, got {self.rse}")
        if not self.cr > 0:
            raise ValueError(f"cr must be > 0, got {self.cr}")
        if not self.elapsed_seconds >= 0:
            raise ValueError("elapsed_seconds must be >= 0")

    def row(self):
        return {
            "method": self.method,
            "dataset": self.dataset,
            "K": "x".join(map(str, self.sketch_dims)) if self.sketch_dims else "-",
            "ranks": "x".join(map(str, self.ranks)),
            "rse": repr(float(self.rse)),
            "cr": repr(float(self.cr)),
            "seconds": f"{self.elapsed_seconds:.6f}",
            "seed": str(self.seed),
        }


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = None  # None means no noise
    seed: int = 0

    def __post_init__(self):
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    @property
    def label(self):
        return "none" if self.snr_db is None else f"{self.snr_db:g}dB"


def add_noise(x, spec):
    """``x + E`` with Gaussian ``E`` rescaled so that ``||E|| / ||x|| = 10^(-snr/20)``."""
    x = as_tensor(x)
    if spec.snr_db is None:
        return x.copy()
    xnorm = frobenius_norm(x)
    if xnorm == 0:
        raise ValueError("cannot set an SNR against a zero tensor")
    rng = philox(spec.seed, NOISE)
    e = rng.standard_normal(x.shape)
    e *= xnorm * 10.0 ** (-spec.snr_db / 20.0) / frobenius_norm(e)
    return x + e


def write_csv(records, stream):
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.row())


def csv_text(records):
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(stream):
    return list(csv.DictReader(stream))


def run_method(x, method, cfg, sketch_dims=None, proj_seed=None):
    """Run one solver on ``x``. Returns the :class:`SolveReport`."""
    if method in RESERVED:
        raise NotImplementedError(f"{method} is an external baseline and is not implemented")
    if method == "trals":
        return trals(x, cfg)
    if method == "trsvd":
        return trsvd(x, cfg)
    if method == "trsgd":
        return trsgd(x, cfg)
    if method in RANDOMIZED:
        spec = ProjectionSpec(
            sketch_dims if sketch_dims is not None else x.shape,
            cfg.seed if proj_seed is None else proj_seed,
        )
        return (rtrals if method == "rtrals" else rtrsvd)(x, cfg, spec)
    raise ValueError(f"unknown method {method!r}")


def record_for(report, method, dataset, shape, cfg, sketch_dims=None, reference=None):
    """Build a RunRecord; ``reference`` overrides the tensor the RSE is measured against."""
    err = report.rse if reference is None else rse(reference, reconstruct_full(report.factors))
    return RunRecord(
        method=method,
        dataset=dataset,
        sketch_dims=tuple(sketch_dims) if sketch_dims is not None else (),
        ranks=report.factors.ranks,
        rse=err,
        cr=compression_ratio(shape, report.factors),
        elapsed_seconds=report.elapsed_seconds,
        seed=cfg.seed,
    )


def clamp_sizes(shape, size, fixed_last=True):
    """Sketch dims for the image protocol: ``size`` on modes 1, 2, the rest kept."""
    dims = [min(size, i) for i in shape]
    if fixed_last:
        dims[2:] = shape[2:]
    return tuple(dims)


def sweep_projection(image, sizes, methods, cfg, dataset="image", tsvd_cfg=None):
    """Projection-size sweep on a third-order image.

    Modes 1 and 2 are sketched to each size in ``sizes`` (clamped to the
    extent), mode 3 is kept whole. Deterministic methods do not depend on the
    size; they run once and are reported against every size so the output has
    exactly ``len(sizes) * len(methods)`` records. ``tsvd_cfg`` (defaults to
    ``cfg``) drives the SVD-based methods.
    """
    image = as_tensor(image)
    if image.ndim != 3:
        raise ValueError(f"sweep needs a third-order image, got shape {image.shape}")
    tsvd_cfg = tsvd_cfg or cfg
    cache = {}
    records = []
    for size in sizes:
        dims = clamp_sizes(image.shape, size)
        for method in methods:
            mcfg = tsvd_cfg if method in ("trsvd", "rtrsvd") else cfg
            if method in DETERMINISTIC:
                if method not in cache:
                    cache[method] = run_method(image, method, mcfg)
                report = cache[method]
            else:
                report = run_method(image, method, mcfg, dims)
            log.info("sweep size %d %s rse %.4f %.2fs", size, method, report.rse, report.elapsed_seconds)
            records.append(record_for(report, method, dataset, image.shape, mcfg, dims))
    return records


def compress_dataset(x, method, cfg, dataset="dten", sketch_dims=None, save_factors=None):
    """Compress one dataset tensor; optionally save the factors as TRNG."""
    x = as_tensor(x)
    report = run_method(x, method, cfg, sketch_dims)
    if save_factors is not None:
        write_trng(save_factors, report.factors)
    dims = sketch_dims if method in RANDOMIZED else None
    if method in RANDOMIZED and dims is None:
        dims = x.shape
    return record_for(report, method, dataset, x.shape, cfg, dims)


def write_pgm_bands(cube, directory, prefix):
    """Dump each band of a cube as an 8-bit binary PGM, linearly rescaled."""
    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lo, hi = float(cube.min()), float(cube.max())
    span = hi - lo if hi > lo else 1.0
    paths = []
    for b in range(cube.shape[2]):
        band = np.round((cube[:, :, b] - lo) / span * 255.0).astype(np.uint8)
        path = directory / f"{prefix}_band{b:03d}.pgm"
        Image.fromarray(band, mode="L").save(path, format="PPM")
        paths.append(path)
    return paths


def denoise_hsi(cube, noises, methods, cfg, sketch_dims=None, dataset="hsi", dump_dir=None,
                tsvd_cfg=None):
    """Decompose noisy copies of ``cube`` and score each against the clean cube."""
    cube = as_tensor(cube)
    if cube.ndim != 3:
        raise ValueError(f"denoise needs a third-order cube, got shape {cube.shape}")
    tsvd_cfg = tsvd_cfg or cfg
    records = []
    for noise in noises:
        noisy = add_noise(cube, noise)
        for method in methods:
            mcfg = tsvd_cfg if method in ("trsvd", "rtrsvd") else cfg
            report = run_method(noisy, method, mcfg, sketch_dims)
            dims = (sketch_dims or cube.shape) if method in RANDOMIZED else None
            rec = record_for(report, method, f"{dataset}@{noise.label}", cube.shape, mcfg, dims,
                             reference=cube)
            records.append(rec)
            if dump_dir is not None:
                write_pgm_bands(reconstruct_full(report.factors), dump_dir, f"{method}_{noise.label}")
    return records


def default_config(method, ranks=None, tol=None, max_sweeps=50, seed=0, **kw):
    """Per-method defaults: SVD methods use tolerance 0.15, ALS/SGD 1e-6."""
    if tol is None:
        tol = 0.15 if method in ("trsvd", "rtrsvd") else 1e-6
    return SolverConfig(ranks=ranks, tolerance=tol, max_sweeps=max_sweeps, seed=seed, **kw)
