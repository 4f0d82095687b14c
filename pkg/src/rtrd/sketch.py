"""Randomized tensor-ring decomposition via per-mode Gaussian sketching.

The pipeline is: shrink each mode of ``x`` onto an orthonormal basis of the
range of a Gaussian sketch of its unfolding, decompose the small projected
tensor with a deterministic solver, then lift every core back along its
physical mode.

Random draws come from numpy's ``Philox`` counter-based generator seeded with
``ProjectionSpec.seed`` (the sketch stream of :mod:`rtrd.rng`); normal variates
use ``Generator.standard_normal``. One stream is consumed sequentially across
modes.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .ring import TRFactors
from .rng import SKETCH, philox
from .solvers import SolveReport, _model_rse, trals, trsvd
from .tensor import as_tensor, frobenius_norm, mode_n_product, unfold_classic


@dataclass(frozen=True)
class ProjectionSpec:
    sketch_dims: tuple
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(k) for k in self.sketch_dims)
        if any(k < 1 for k in dims):
            raise ValueError(f"sketch sizes must be >= 1, got {dims}")
        object.__setattr__(self, "sketch_dims", dims)

    def validate(self, shape):
        if len(self.sketch_dims) != len(shape):
            raise ValueError(f"{len(self.sketch_dims)} sketch sizes for an order-{len(shape)} tensor")
        for n, (k, i) in enumerate(zip(self.sketch_dims, shape)):
            if k > i:
                raise ValueError(f"sketch size {k} exceeds extent {i} of mode {n}")

    @classmethod
    def full(cls, shape, seed=0):
        return cls(tuple(shape), seed)


@dataclass(frozen=True)
class SketchResult:
    projected: np.ndarray
    bases: tuple
    skipped: tuple


def make_rng(seed):
    return philox(seed, SKETCH)


def gaussian_matrix(rows, cols, rng):
    if rows < 1 or cols < 1:
        raise ValueError("gaussian_matrix needs rows, cols >= 1")
    return rng.standard_normal((rows, cols))


def orthonormal_basis(y):
    """Economy QR basis of ``y`` with the R diagonal forced nonnegative."""
    q, r = sla.qr(y, mode="economic", check_finite=False)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def sketch(x, spec):
    """Project every mode of ``x`` onto a randomized orthonormal basis.

    Modes are processed in order on a shrinking working tensor: the Gaussian
    test matrix for mode ``n`` has as many rows as the current unfolding has
    columns. Modes with ``K_n == I_n`` get an identity basis and no draw.
    """
    x = as_tensor(x)
    spec.validate(x.shape)
    rng = make_rng(spec.seed)
    p = x
    bases, skipped = [], []
    for n, k in enumerate(spec.sketch_dims):
        if k == x.shape[n]:
            bases.append(np.eye(k))
            skipped.append(True)
            continue
        unfolded = unfold_classic(p, n)
        y = unfolded @ gaussian_matrix(unfolded.shape[1], k, rng)
        q = orthonormal_basis(y)
        p = mode_n_product(p, n, q.T)
        bases.append(q)
        skipped.append(False)
    if p is x:
        p = x.copy()
    return SketchResult(p, tuple(bases), tuple(skipped))


def lift(projected, bases):
    """``projected x_1 Q_1 ... x_N Q_N``: map a sketched tensor back to full size."""
    out = np.asarray(projected, dtype=np.float64)
    for n, q in enumerate(bases):
        if not _is_identity(q):
            out = mode_n_product(out, n, q)
    return out


def _is_identity(q):
    return q.shape[0] == q.shape[1] and np.array_equal(q, np.eye(q.shape[0]))


def back_project(z, bases):
    """Lift each small core along its middle (physical) mode: ``G_n = Z_n x_2 Q_n``."""
    if len(bases) != z.order:
        raise ValueError(f"{len(bases)} bases for {z.order} cores")
    cores = []
    for n, (core, q) in enumerate(zip(z.cores, bases)):
        q = np.asarray(q, dtype=np.float64)
        if q.ndim != 2 or q.shape[1] != core.shape[1]:
            raise ValueError(f"basis {n} has shape {q.shape}, core {n} has middle extent {core.shape[1]}")
        if _is_identity(q):
            cores.append(core)
        else:
            cores.append(mode_n_product(core, 1, q))
    return TRFactors(cores)


def rtrd(x, cfg, spec, solver=trals):
    """Sketch ``x``, decompose the projected tensor with ``solver``, lift back.

    The returned report's factors live at full scale and its single
    ``rse_history`` entry is measured against ``x``; the small-scale run is
    kept in ``report.inner``.
    """
    x = as_tensor(x)
    spec.validate(x.shape)
    if cfg.ranks is not None:
        for n, (r, k) in enumerate(zip(cfg.ranks, spec.sketch_dims)):
            # an unsketched mode loses nothing, whatever the rank
            if r > k and k < x.shape[n]:
                warnings.warn(f"rank {r} exceeds sketch size {k} at mode {n}", stacklevel=2)
    start = time.perf_counter()
    sk = sketch(x, spec)
    inner = solver(sk.projected, cfg)
    factors = back_project(inner.factors, sk.bases)
    xnorm = frobenius_norm(x)
    err = _model_rse(x, factors, xnorm)
    return SolveReport(
        factors,
        [err],
        inner.sweeps_run,
        time.perf_counter() - start,
        discarded_energy=inner.discarded_energy,
        inner=inner,
    )


def rtrals(x, cfg, spec):
    return rtrd(x, cfg, spec, solver=trals)


def rtrsvd(x, cfg, spec):
    return rtrd(x, cfg, spec, solver=trsvd)
