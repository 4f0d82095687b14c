"""Loaders for the benchmark inputs. Pixel data is scaled to [0, 1] floats."""

import os
import re
from pathlib import Path

import numpy as np

from .ring import random_factors, reconstruct_full
from .tensor import FormatError, read_dten

CIFAR_RECORD = 3073
CIFAR_TRAIN_FILES = [f"data_batch_{k}.bin" for k in range(1, 6)]

_COIL_NAME = re.compile(r"obj(\d+)__(\d+)\.png$", re.IGNORECASE)


def load_image(path):
    """RGB (or grayscale) image file or DTEN tensor as a float64 array."""
    path = Path(path)
    if path.suffix.lower() == ".dten":
        return read_dten(path)
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB") if im.mode not in ("L", "RGB") else im)
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from None
    return arr.astype(np.float64) / 255.0


def sample_image(size=1024):
    """A natural ``size x size x 3`` RGB photo: scikit-image's bundled 512x512
    astronaut portrait, bilinearly resampled."""
    import skimage.data
    from skimage.transform import resize

    img = skimage.data.astronaut().astype(np.float64) / 255.0
    return np.clip(resize(img, (size, size, 3), order=1, anti_aliasing=False), 0.0, 1.0)


def _cifar_files(path):
    path = Path(path)
    if path.is_dir():
        files = [path / name for name in CIFAR_TRAIN_FILES if (path / name).exists()]
        if not files:
            raise FormatError(f"no CIFAR-10 data_batch_*.bin files in {path}")
        return files
    return [path]


def load_cifar10(path, limit=None):
    """CIFAR-10 binary batches as a ``(32, 32, 3, n)`` tensor.

    ``path`` is one ``.bin`` file or the directory holding
    ``data_batch_1.bin`` .. ``data_batch_5.bin``. Each record is one label
    byte (discarded) followed by 1024 R, 1024 G, 1024 B row-major bytes.
    """
    chunks = []
    for f in _cifar_files(path):
        raw = np.fromfile(f, dtype=np.uint8)
        if raw.size == 0 or raw.size % CIFAR_RECORD:
            raise FormatError(f"{f}: size {raw.size} is not a multiple of {CIFAR_RECORD}")
        chunks.append(raw.reshape(-1, CIFAR_RECORD)[:, 1:])
    pixels = np.concatenate(chunks)
    if limit is not None:
        pixels = pixels[:limit]
    # (n, c, h, w) -> (h, w, c, n)
    images = pixels.reshape(-1, 3, 32, 32).transpose(2, 3, 1, 0)
    return images.astype(np.float64) / 255.0


def load_coil100(path, size=32):
    """COIL-100 ``objN__A.png`` files as an ``(size, size, 3, poses, objects)`` tensor.

    Images are resized to ``size x size``. Every object must share the same set
    of pose angles.
    """
    from PIL import Image

    found = {}
    for name in os.listdir(path):
        m = _COIL_NAME.search(name)
        if m:
            found.setdefault(int(m.group(1)), {})[int(m.group(2))] = Path(path) / name
    if not found:
        raise FormatError(f"no COIL-100 objN__A.png files in {path}")
    objects = sorted(found)
    poses = sorted(found[objects[0]])
    for obj in objects:
        if sorted(found[obj]) != poses:
            raise FormatError(f"object {obj} has poses {sorted(found[obj])}, expected {poses}")
    out = np.empty((size, size, 3, len(poses), len(objects)))
    for j, obj in enumerate(objects):
        for i, pose in enumerate(poses):
            with Image.open(found[obj][pose]) as im:
                im = im.convert("RGB").resize((size, size), Image.BILINEAR)
                out[:, :, :, i, j] = np.asarray(im, dtype=np.float64) / 255.0
    return out


def load_dataset(kind, path, limit=None):
    if kind == "cifar10":
        return load_cifar10(path, limit=limit)
    if kind == "coil100":
        return load_coil100(path)
    if kind == "dten":
        return read_dten(path)
    raise ValueError(f"unknown dataset kind {kind!r}")


def synthetic_tr_tensor(shape, ranks, seed=0):
    """Dense tensor of exact TR-rank ``ranks``, normalized to unit RMS."""
    x = reconstruct_full(random_factors(shape, ranks, seed=seed))
    return x / np.sqrt(np.mean(x ** 2))
