"""Dense tensor algebra: unfoldings, foldings, mode products, norms, DTEN files.

Tensors are plain ``numpy`` float64 arrays. Every flattening in this package
uses first-index-fastest (Fortran) linearization, so a flat offset is
``i_1 + I_1*(i_2 + I_2*(i_3 + ...))``. Modes are 0-based.

Two unfoldings are provided:

* ``unfold_classic(t, n)``: ``I_n x prod(I_k, k != n)`` with columns ordered
  ``(i_1, ..., i_{n-1}, i_{n+1}, ..., i_N)``, earlier indices fastest.
* ``unfold_tr(t, n)``: same size, columns cyclically ordered
  ``(i_{n+1}, ..., i_N, i_1, ..., i_{n-1})``, earlier indices fastest.
"""

import struct

import numpy as np

DTEN_MAGIC = b"DTEN"
DTEN_VERSION = 1


class FormatError(ValueError):
    """Raised for malformed DTEN/TRNG payloads or dataset files."""


def as_tensor(data):
    """Return ``data`` as a float64 array with at least one dimension."""
    t = np.asarray(data, dtype=np.float64)
    if t.ndim == 0:
        t = t.reshape(1)
    if any(d < 1 for d in t.shape):
        raise ValueError(f"every dimension must be >= 1, got {t.shape}")
    return t


def from_flat(flat, shape):
    """Build a tensor from first-index-fastest flat data."""
    flat = np.asarray(flat, dtype=np.float64).ravel()
    shape = tuple(int(s) for s in shape)
    if flat.size != int(np.prod(shape)):
        raise ValueError(f"{flat.size} values cannot fill shape {shape}")
    return as_tensor(flat.reshape(shape, order="F"))


def to_flat(t):
    return np.asarray(t, dtype=np.float64).ravel(order="F")


def _check_mode(t, n):
    if not 0 <= n < t.ndim:
        raise ValueError(f"mode {n} out of range for order-{t.ndim} tensor")


def _cyclic_axes(ndim, n):
    return [n] + [(n + k) % ndim for k in range(1, ndim)]


def unfold_classic(t, n):
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t, n)
    return np.moveaxis(t, n, 0).reshape(t.shape[n], -1, order="F")


def fold_classic(m, n, shape):
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if not 0 <= n < len(shape):
        raise ValueError(f"mode {n} out of range for order-{len(shape)} shape")
    rest = int(np.prod(shape)) // shape[n]
    if m.shape != (shape[n], rest):
        raise ValueError(f"matrix {m.shape} does not unfold shape {shape} at mode {n}")
    moved = (shape[n],) + shape[:n] + shape[n + 1:]
    return np.moveaxis(m.reshape(moved, order="F"), 0, n)


def unfold_tr(t, n):
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t, n)
    return t.transpose(_cyclic_axes(t.ndim, n)).reshape(t.shape[n], -1, order="F")


def fold_tr(m, n, shape):
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if not 0 <= n < len(shape):
        raise ValueError(f"mode {n} out of range for order-{len(shape)} shape")
    rest = int(np.prod(shape)) // shape[n]
    if m.shape != (shape[n], rest):
        raise ValueError(f"matrix {m.shape} does not unfold shape {shape} at mode {n}")
    axes = _cyclic_axes(len(shape), n)
    permuted = m.reshape([shape[a] for a in axes], order="F")
    return permuted.transpose(np.argsort(axes))


def mode_n_product(t, n, m):
    """Multiply ``t`` along mode ``n`` by matrix ``m`` (``m.shape[1] == I_n``)."""
    t = np.asarray(t, dtype=np.float64)
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    _check_mode(t, n)
    if m.shape[1] != t.shape[n]:
        raise ValueError(f"matrix has {m.shape[1]} columns, mode {n} has extent {t.shape[n]}")
    out = np.tensordot(m, t, axes=([1], [n]))
    return np.moveaxis(out, 0, n)


def inner_product(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frobenius_norm(t):
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))


# -- DTEN binary format -------------------------------------------------------
# magic "DTEN" | u32 version | u32 order N | N x u64 dims | f64 LE data (F order)


def dten_bytes(t):
    t = as_tensor(t)
    header = DTEN_MAGIC + struct.pack("<II", DTEN_VERSION, t.ndim)
    header += struct.pack(f"<{t.ndim}Q", *t.shape)
    return header + to_flat(t).astype("<f8").tobytes()


def parse_dten(buf, offset=0):
    """Parse one DTEN record from ``buf`` starting at ``offset``.

    Returns ``(tensor, next_offset)``.
    """
    view = memoryview(buf)
    if bytes(view[offset:offset + 4]) != DTEN_MAGIC:
        raise FormatError("bad DTEN magic")
    try:
        version, order = struct.unpack_from("<II", view, offset + 4)
        if version != DTEN_VERSION:
            raise FormatError(f"unsupported DTEN version {version}")
        if order < 1:
            raise FormatError("DTEN order must be >= 1")
        dims = struct.unpack_from(f"<{order}Q", view, offset + 12)
    except struct.error as exc:
        raise FormatError(f"truncated DTEN header: {exc}") from None
    if any(d < 1 for d in dims):
        raise FormatError(f"DTEN dims must be >= 1, got {dims}")
    start = offset + 12 + 8 * order
    count = int(np.prod(dims))
    end = start + 8 * count
    if end > len(view):
        raise FormatError(f"DTEN payload truncated: need {end - start} bytes")
    flat = np.frombuffer(view[start:end], dtype="<f8").astype(np.float64)
    return flat.reshape(dims, order="F"), end


def write_dten(path, t):
    with open(path, "wb") as fh:
        fh.write(dten_bytes(t))


def read_dten(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    t, end = parse_dten(buf)
    if end != len(buf):
        raise FormatError(f"{len(buf) - end} trailing bytes after DTEN payload")
    return t
