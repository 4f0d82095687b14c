"""Tensor-ring factors: reconstruction, subchains, parameter counts, TRNG files.

Core ``n`` has shape ``(R_n, I_n, R_{n+1})`` with the ring closed by
``R_N = R_0``. An entry of the represented tensor is the trace of the ordered
product of the lateral slices ``core_n[:, i_n, :]``.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .rng import FACTORS, philox
from .tensor import FormatError, as_tensor, dten_bytes, fold_tr, parse_dten

TRNG_MAGIC = b"TRNG"
TRNG_VERSION = 1


@dataclass(frozen=True)
class TRFactors:
    cores: tuple

    def __post_init__(self):
        cores = tuple(as_tensor(c) for c in self.cores)
        if not cores:
            raise ValueError("a tensor ring needs at least one core")
        for n, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {n} must be third-order, got shape {c.shape}")
            nxt = cores[(n + 1) % len(cores)]
            if c.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"rank mismatch between core {n} {c.shape} and core "
                    f"{(n + 1) % len(cores)} {nxt.shape}"
                )
        object.__setattr__(self, "cores", cores)

    @property
    def order(self):
        return len(self.cores)

    @property
    def ranks(self):
        return tuple(c.shape[0] for c in self.cores)

    @property
    def shape(self):
        return tuple(c.shape[1] for c in self.cores)

    def __len__(self):
        return len(self.cores)

    def __iter__(self):
        return iter(self.cores)

    def __getitem__(self, n):
        return self.cores[n]


def random_factors(shape, ranks, seed=0, scale=1.0):
    """TR factors with i.i.d. N(0, scale^2) core entries."""
    shape = tuple(int(s) for s in shape)
    ranks = tuple(int(r) for r in ranks)
    if len(shape) != len(ranks):
        raise ValueError("shape and ranks must have the same length")
    rng = philox(seed, FACTORS)
    n = len(shape)
    return TRFactors(
        [scale * rng.standard_normal((ranks[k], shape[k], ranks[(k + 1) % n])) for k in range(n)]
    )


def reconstruct_elementwise(f, idx):
    idx = tuple(int(i) for i in idx)
    if len(idx) != f.order:
        raise ValueError(f"expected {f.order} indices, got {len(idx)}")
    prod = None
    for n, (core, i) in enumerate(zip(f.cores, idx)):
        if not 0 <= i < core.shape[1]:
            raise IndexError(f"index {i} out of range for mode {n} of extent {core.shape[1]}")
        prod = core[:, i, :] if prod is None else prod @ core[:, i, :]
    return float(np.trace(prod))


def _merge(left, right):
    # (a, J, b) x (b, K, c) -> (a, J*K, c), J index fastest
    a, j, _ = left.shape
    _, k, c = right.shape
    out = np.tensordot(left, right, axes=([2], [0]))  # (a, J, K, c)
    return out.reshape(a, j * k, c, order="F")


def subchain(f, n):
    """Merge every core except ``n``, in ring order ``n+1, ..., N-1, 0, ..., n-1``.

    Result has shape ``(R_{n+1}, prod_{k != n} I_k, R_n)``; the middle index
    runs over the remaining modes in that cyclic order, earliest fastest.
    """
    if f.order < 2:
        raise ValueError("subchain needs at least two cores")
    if not 0 <= n < f.order:
        raise ValueError(f"mode {n} out of range for {f.order} cores")
    order = [(n + k) % f.order for k in range(1, f.order)]
    out = f.cores[order[0]]
    for k in order[1:]:
        out = _merge(out, f.cores[k])
    return out


def subchain_matrix(f, n):
    """``G_{!=n,<2>}``: the subchain unfolded to ``prod_{k!=n} I_k x R_n*R_{n+1}``.

    Columns are ordered ``(r_n, r_{n+1})`` with ``r_n`` fastest, matching the
    columns of the mode-2 unfolding of core ``n``.
    """
    sub = subchain(f, n)
    r_next, m, r_n = sub.shape
    # C-contiguous (r_next, r_n, m) is exactly the F-ordered (m, r_n*r_next) matrix
    return np.ascontiguousarray(sub.transpose(0, 2, 1)).reshape(r_next * r_n, m).T


def core_unfold(core):
    """Mode-2 unfolding of a core: ``I_n x R_n*R_{n+1}``, ``r_n`` fastest."""
    r0, i, r1 = core.shape
    return core.transpose(1, 0, 2).reshape(i, r0 * r1, order="F")


def core_fold(mat, r0, r1):
    i = mat.shape[0]
    return np.ascontiguousarray(mat.reshape(i, r0, r1, order="F").transpose(1, 0, 2))


def reconstruct_full(f, n=0):
    """Dense tensor from ``X_<n> = G_{n,(2)} (G_{!=n,<2>})^T``."""
    if f.order == 1:
        core = f.cores[0]
        return np.einsum("aia->i", core).astype(np.float64)
    xn = core_unfold(f.cores[n]) @ subchain_matrix(f, n).T
    return fold_tr(xn, n, f.shape)


def num_params(f):
    return int(sum(c.size for c in f.cores))


def compression_ratio(shape, f):
    shape = tuple(int(s) for s in shape)
    if shape != f.shape:
        raise ValueError(f"shape {shape} does not match factors {f.shape}")
    return float(np.prod(shape, dtype=np.float64)) / num_params(f)


def rotate(f, k):
    """Cyclically shift the core list so that core ``k`` comes first."""
    k %= f.order
    return TRFactors(f.cores[k:] + f.cores[:k])


# -- TRNG binary format -------------------------------------------------------
# magic "TRNG" | u32 version | u32 N | N DTEN records


def trng_bytes(f):
    out = [TRNG_MAGIC, struct.pack("<II", TRNG_VERSION, f.order)]
    out.extend(dten_bytes(c) for c in f.cores)
    return b"".join(out)


def parse_trng(buf):
    if bytes(buf[:4]) != TRNG_MAGIC:
        raise FormatError("bad TRNG magic")
    try:
        version, order = struct.unpack_from("<II", buf, 4)
    except struct.error:
        raise FormatError("truncated TRNG header") from None
    if version != TRNG_VERSION:
        raise FormatError(f"unsupported TRNG version {version}")
    offset = 12
    cores = []
    for _ in range(order):
        core, offset = parse_dten(buf, offset)
        if core.ndim != 3:
            raise FormatError(f"TRNG core must be third-order, got {core.shape}")
        cores.append(core)
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes after TRNG payload")
    try:
        return TRFactors(cores)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_trng(path, f):
    with open(path, "wb") as fh:
        fh.write(trng_bytes(f))


def read_trng(path):
    with open(path, "rb") as fh:
        return parse_trng(fh.read())
