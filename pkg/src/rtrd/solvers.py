"""Deterministic tensor-ring solvers: TR-ALS, TR-SVD and a TR-SGD baseline.

All three minimize ``||X - TR(cores)||_F^2``. ALS and SGD take a fixed rank
vector; TR-SVD picks ranks from a relative error tolerance.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .ring import TRFactors, core_fold, reconstruct_full, subchain_matrix
from .rng import ALS_INIT, SGD_SAMPLING, philox
from .tensor import as_tensor, frobenius_norm, unfold_tr

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """Raised when an iterative solver blows up."""


@dataclass(frozen=True)
class SolverConfig:
    ranks: tuple = None
    tolerance: float = 1e-6
    max_sweeps: int = 50
    seed: int = 0
    sgd_step: float = 0.05
    sgd_batch: int = 16
    # independent ALS starts; the lowest training RSE wins
    restarts: int = 1

    def __post_init__(self):
        if self.ranks is not None:
            ranks = tuple(int(r) for r in self.ranks)
            if any(r < 1 for r in ranks):
                raise ValueError(f"ranks must be >= 1, got {ranks}")
            object.__setattr__(self, "ranks", ranks)
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be >= 0")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.sgd_step >= 0:
            raise ValueError("sgd_step must be >= 0")
        if self.sgd_batch < 1:
            raise ValueError("sgd_batch must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class SolveReport:
    factors: TRFactors
    rse_history: list
    sweeps_run: int
    elapsed_seconds: float
    # sum of squared discarded singular values (TR-SVD only)
    discarded_energy: float = None
    inner: "SolveReport" = field(default=None, repr=False)

    @property
    def rse(self):
        return self.rse_history[-1]


def rse(x, y):
    """Relative error ``||x - y||_F / ||x||_F``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    ref = frobenius_norm(x)
    if ref == 0:
        raise ValueError("RSE is undefined for a zero reference tensor")
    return frobenius_norm(x - y) / ref


def _model_rse(x, f, xnorm):
    if xnorm == 0:
        return 0.0
    return frobenius_norm(x - reconstruct_full(f)) / xnorm


def _check_ranks(x, cfg):
    if cfg.ranks is None:
        raise ValueError("this solver needs cfg.ranks")
    if len(cfg.ranks) != x.ndim:
        raise ValueError(f"{len(cfg.ranks)} ranks given for an order-{x.ndim} tensor")


def init_cores(shape, ranks, seed, xnorm):
    """Gaussian cores scaled so the initial model norm roughly matches ``xnorm``.

    Draws come from the ALS-init stream, so an init never replays
    ``random_factors`` under the same seed.
    """
    n = len(shape)
    rng = philox(seed, ALS_INIT)
    dof = math.prod(ranks) * math.prod(shape)
    scale = (xnorm / math.sqrt(dof)) ** (1.0 / n) if xnorm > 0 else 1.0
    return [scale * rng.standard_normal((ranks[k], shape[k], ranks[(k + 1) % n])) for k in range(n)]


# -- ALS -----------------------------------------------------------------------

# subchains with more entries than this go through the normal equations
_DENSE_LIMIT = 2_000_000
# Cholesky only below this Gram condition estimate; QR/lstsq beyond it
_COND_LIMIT = 1e8
_RANK_TOL = 1e-12


def _transfer(core):
    # E[(r, t), (s, u)] = sum_i G[r, i, s] G[t, i, u]
    r0, _, r1 = core.shape
    e = np.tensordot(core, core, axes=([1], [1]))  # (r, s, t, u)
    return e.transpose(0, 2, 1, 3).reshape(r0 * r0, r1 * r1)


def subchain_gram(cores, n):
    """``B^T B`` for ``B = G_{!=n,<2>}`` without forming ``B``."""
    n_modes = len(cores)
    chain = None
    for k in range(1, n_modes):
        e = _transfer(cores[(n + k) % n_modes])
        chain = e if chain is None else chain @ e
    rb = cores[(n + 1) % n_modes].shape[0]
    ra = cores[n].shape[0]
    m4 = chain.reshape(rb, rb, ra, ra)
    return m4.transpose(2, 0, 3, 1).reshape(ra * rb, ra * rb, order="F")


def subchain_rhs(x, cores, n):
    """``X_<n> B`` for ``B = G_{!=n,<2>}``, contracting ``x`` core by core.

    The merged segment of the ring grows from the largest mode outward, always
    absorbing the larger neighbouring mode next, so intermediates stay small.
    """
    n_modes = len(cores)
    chain = [(n + k) % n_modes for k in range(1, n_modes)]
    lo = hi = max(range(len(chain)), key=lambda j: x.shape[chain[j]])
    modes = list(range(n_modes))
    first = chain[lo]
    # t axes: remaining modes of x, then (r_left, r_right) of the merged segment
    t = np.tensordot(x, cores[first], axes=([first], [1]))
    modes.remove(first)
    while lo > 0 or hi < len(chain) - 1:
        left = chain[lo - 1] if lo > 0 else None
        right = chain[hi + 1] if hi < len(chain) - 1 else None
        if right is None or (left is not None and x.shape[left] > x.shape[right]):
            k, lo = left, lo - 1
            t = np.tensordot(t, cores[k], axes=([modes.index(k), t.ndim - 2], [1, 2]))
            t = np.swapaxes(t, -1, -2)
        else:
            k, hi = right, hi + 1
            t = np.tensordot(t, cores[k], axes=([modes.index(k), t.ndim - 1], [1, 0]))
        modes.remove(k)
    # t: (I_n, r_{n+1}, r_n) -> columns (r_n, r_{n+1}), r_n fastest
    return t.transpose(0, 2, 1).reshape(x.shape[n], -1, order="F")


def _solve_core(x, cores, n):
    """Least-squares ``argmin_G ||X_<n> - G B^T||_F`` with ``B = G_{!=n,<2>}``.

    Small subchains are materialized and solved by QR (minimum-norm ``lstsq``
    when numerically rank deficient). Large ones use the normal equations,
    built by contraction without forming ``B``, when the Gram matrix is well
    conditioned.
    """
    m = math.prod(x.shape) // x.shape[n]
    k = cores[n].shape[0] * cores[n].shape[2]
    if m * k > _DENSE_LIMIT:
        gram = subchain_gram(cores, n)
        try:
            chol, lower = sla.cho_factor(gram, lower=False, check_finite=False)
            diag = np.abs(np.diag(chol))
            if diag.min() > 0 and (diag.max() / diag.min()) ** 2 < _COND_LIMIT:
                rhs = subchain_rhs(x, cores, n)
                return sla.cho_solve((chol, lower), rhs.T, check_finite=False).T
        except np.linalg.LinAlgError:
            pass
    xn = unfold_tr(x, n)
    b = subchain_matrix(TRFactors(cores), n)
    if m >= k:
        q, r = sla.qr(b, mode="economic", check_finite=False)
        rdiag = np.abs(np.diag(r))
        if rdiag.min() > _RANK_TOL * rdiag.max():
            return sla.solve_triangular(r, (xn @ q).T, check_finite=False).T
    sol, *_ = sla.lstsq(b, xn.T, cond=_RANK_TOL, check_finite=False)
    return sol.T


def als_sweep(x, cores):
    """One in-place pass of core updates ``n = 0..N-1``."""
    for n in range(len(cores)):
        g = _solve_core(x, cores, n)
        cores[n] = core_fold(g, cores[n].shape[0], cores[n].shape[2])


def restart_seed(seed, k):
    """Init seed of ALS start ``k``; start 0 uses ``seed`` itself."""
    if k == 0:
        return seed
    return int(np.random.SeedSequence([seed & (2**64 - 1), k]).generate_state(1, np.uint64)[0])


def trals(x, cfg, init=None):
    """Tensor-ring ALS with fixed ranks.

    Each core update solves ``X_<n> ~= G_{n,(2)} G_{!=n,<2>}^T`` exactly in the
    least-squares sense, so the per-sweep RSE never increases. Stops after
    ``cfg.max_sweeps`` sweeps or once the relative RSE change drops below
    ``cfg.tolerance``.

    ALS from a random start can settle in a local minimum. With
    ``cfg.restarts > 1`` (and no ``init``) that many seeded starts run and the
    one with the lowest final RSE is returned; its history is reported and
    ``elapsed_seconds`` covers all starts.
    """
    x = as_tensor(x)
    _check_ranks(x, cfg)
    start = time.perf_counter()
    xnorm = frobenius_norm(x)
    if xnorm == 0:
        cores = [np.zeros((cfg.ranks[k], x.shape[k], cfg.ranks[(k + 1) % x.ndim]))
                 for k in range(x.ndim)]
        return SolveReport(TRFactors(cores), [0.0], 0, time.perf_counter() - start)
    if x.ndim == 1:
        # a single core: X(i) = trace(G(i)); the diagonal carries everything
        r = cfg.ranks[0]
        core = np.zeros((r, x.shape[0], r))
        core[0, :, 0] = x
        f = TRFactors([core])
        return SolveReport(f, [_model_rse(x, f, xnorm)], 1, time.perf_counter() - start)

    best = None
    for k in range(1 if init is not None else cfg.restarts):
        if init is None:
            cores = init_cores(x.shape, cfg.ranks, restart_seed(cfg.seed, k), xnorm)
        else:
            cores = [np.array(c, dtype=np.float64) for c in init]
        history = _als_run(x, cores, cfg, xnorm)
        if best is None or history[-1] < best[1][-1]:
            best = (cores, history)
        log.debug("trals start %d final rse %.3e", k, history[-1])
    cores, history = best
    return SolveReport(TRFactors(cores), history, len(history), time.perf_counter() - start)


def _als_run(x, cores, cfg, xnorm):
    history = []
    for sweep in range(cfg.max_sweeps):
        als_sweep(x, cores)
        err = _model_rse(x, TRFactors(cores), xnorm)
        history.append(err)
        log.debug("trals sweep %d rse %.3e", sweep + 1, err)
        if sweep > 0 and abs(history[-2] - err) < cfg.tolerance * history[-2]:
            break
    return history


# -- TR-SVD --------------------------------------------------------------------


def balanced_split(r):
    """Split ``r`` into ``(r0, r1)`` with ``r0 * r1 == r``.

    ``r0`` is the divisor of ``r`` nearest ``floor(sqrt(r))``, ties to the smaller.
    """
    target = math.isqrt(r)
    divisors = [d for d in range(1, r + 1) if r % d == 0]
    r0 = min(divisors, key=lambda d: (abs(d - target), d))
    return r0, r // r0


def _truncate(s, delta):
    """Smallest rank whose discarded tail has 2-norm <= delta (at least 1)."""
    tail = np.sqrt(np.cumsum((s ** 2)[::-1]))[::-1]  # tail[k] = ||s[k:]||
    keep = int(np.count_nonzero(tail > delta))
    return max(keep, 1)


def _svd(c):
    try:
        return sla.svd(c, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError:
        return sla.svd(c, full_matrices=False, check_finite=False, lapack_driver="gesvd")


def trsvd(x, cfg):
    """Sequential truncated-SVD construction with automatic ranks.

    Each of the ``N - 1`` truncations discards at most
    ``cfg.tolerance * ||x||_F / sqrt(N)`` in Frobenius norm, so the result
    satisfies ``RSE <= cfg.tolerance``.
    """
    x = as_tensor(x)
    start = time.perf_counter()
    n_modes = x.ndim
    shape = x.shape
    xnorm = frobenius_norm(x)
    if n_modes == 1 or xnorm == 0:
        cores = [np.zeros((1, i, 1)) for i in shape]
        if n_modes == 1:
            cores[0][0, :, 0] = x
        f = TRFactors(cores)
        return SolveReport(f, [_model_rse(x, f, xnorm)], 1, time.perf_counter() - start, 0.0)

    delta = cfg.tolerance * xnorm / math.sqrt(n_modes)
    discarded = 0.0

    u, s, vt = _svd(x.reshape(shape[0], -1, order="F"))
    r = _truncate(s, delta)
    discarded += float(np.sum(s[r:] ** 2))
    r0, r1 = balanced_split(r)
    cores = [np.ascontiguousarray(u[:, :r].reshape(shape[0], r0, r1, order="F").transpose(1, 0, 2))]
    c = s[:r, None] * vt[:r]
    # rows (a, b) with a fastest; push a to the far end of the chain
    c = c.reshape((r0, r1) + shape[1:], order="F")
    c = np.moveaxis(c, 0, -1)  # (r1, I_1, ..., I_{N-1}, r0)
    rank = r1
    for k in range(1, n_modes - 1):
        u, s, vt = _svd(c.reshape(rank * shape[k], -1, order="F"))
        r = _truncate(s, delta)
        discarded += float(np.sum(s[r:] ** 2))
        cores.append(u[:, :r].reshape(rank, shape[k], r, order="F"))
        c = s[:r, None] * vt[:r]
        rank = r
    cores.append(c.reshape(rank, shape[-1], r0, order="F"))
    f = TRFactors(cores)
    err = _model_rse(x, f, xnorm)
    return SolveReport(f, [err], 1, time.perf_counter() - start, discarded)


# -- TR-SGD --------------------------------------------------------------------


def _slices(cores, idx):
    return [core[:, idx[:, n], :].transpose(1, 0, 2) for n, core in enumerate(cores)]


def _chain_products(slices):
    """Prefix ``S_0..S_{n-1}`` and suffix ``S_{n+1}..S_{N-1}`` products, batched."""
    n_modes = len(slices)
    batch = slices[0].shape[0]
    prefix = [None] * (n_modes + 1)
    prefix[0] = np.broadcast_to(np.eye(slices[0].shape[1]), (batch,) + (slices[0].shape[1],) * 2)
    for n in range(n_modes):
        prefix[n + 1] = prefix[n] @ slices[n]
    suffix = [None] * (n_modes + 1)
    r0 = slices[0].shape[1]
    suffix[n_modes] = np.broadcast_to(np.eye(r0), (batch, r0, r0))
    for n in range(n_modes - 1, -1, -1):
        suffix[n] = slices[n] @ suffix[n + 1]
    return prefix, suffix


def sgd_slice_gradients(cores, idx, values):
    """Gradients of ``0.5 * sum_b (values_b - trace(prod_n G_n(idx_b,n)))^2``.

    Returns ``(grads, residuals)`` where ``grads[n]`` has shape
    ``(batch, R_n, R_{n+1})`` and holds the gradient with respect to the slice
    ``G_n[:, idx[b, n], :]`` for each sample ``b``.
    """
    idx = np.atleast_2d(np.asarray(idx, dtype=np.intp))
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    slices = _slices(cores, idx)
    prefix, suffix = _chain_products(slices)
    pred = np.trace(prefix[-1], axis1=1, axis2=2)
    resid = values - pred
    grads = []
    for n in range(len(cores)):
        # d trace(S_n A) / d S_n = A^T,  A = S_{n+1}..S_{N-1} S_0..S_{n-1}
        a = suffix[n + 1] @ prefix[n]
        grads.append(-resid[:, None, None] * a.transpose(0, 2, 1))
    return grads, resid


def trsgd(x, cfg, init=None):
    """Stochastic gradient baseline on sampled entries.

    Entries are sampled uniformly with replacement; each step averages the
    slice gradients of ``cfg.sgd_batch`` samples. One sweep-equivalent is
    ``prod(I_n)`` samples; RSE is recorded after each.
    """
    x = as_tensor(x)
    _check_ranks(x, cfg)
    start = time.perf_counter()
    xnorm = frobenius_norm(x)
    if xnorm == 0:
        raise ValueError("trsgd needs a nonzero tensor")
    rng = philox(cfg.seed, SGD_SAMPLING)
    if init is None:
        cores = init_cores(x.shape, cfg.ranks, cfg.seed, xnorm)
    else:
        cores = [np.array(c, dtype=np.float64) for c in init]
    x_flat = x.ravel(order="F")
    shape = np.array(x.shape)
    total = x.size
    initial = _model_rse(x, TRFactors(cores), xnorm)
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        for sweep in range(cfg.max_sweeps):
            seen = 0
            while seen < total:
                b = min(cfg.sgd_batch, total - seen)
                flat = rng.integers(0, total, size=b)
                idx = np.stack(np.unravel_index(flat, x.shape, order="F"), axis=1)
                grads, resid = sgd_slice_gradients(cores, idx, x_flat[flat])
                if not np.all(np.isfinite(resid)):
                    _diverged(sweep, np.inf, initial, cfg)
                if cfg.sgd_step > 0:
                    for n, g in enumerate(grads):
                        step = np.zeros((shape[n],) + g.shape[1:])
                        np.add.at(step, idx[:, n], g)
                        cores[n] -= (cfg.sgd_step / b) * step.transpose(1, 0, 2)
                seen += b
            err = _model_rse(x, TRFactors(cores), xnorm)
            history.append(err)
            if not np.isfinite(err) or err > 10 * max(initial, 1e-300):
                _diverged(sweep, err, initial, cfg)
    return SolveReport(TRFactors(cores), history, len(history), time.perf_counter() - start)


def _diverged(sweep, err, initial, cfg):
    raise DivergenceError(
        f"trsgd diverged at sweep {sweep + 1}: rse {err:.3e} vs initial {initial:.3e}; "
        f"try a smaller sgd_step (now {cfg.sgd_step})"
    )


SOLVERS = {"trals": trals, "trsvd": trsvd, "trsgd": trsgd}
