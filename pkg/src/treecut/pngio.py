"""Readers/writers for the fixed on-disk formats: 8-bit RGB and 16-bit grayscale PNG."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import InputError


def read_rgb8(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("RGB", "RGBA"):
        raise InputError(f"{path}: expected an 8-bit color image, got mode {img.mode!r}")
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def read_gray16(path) -> np.ndarray:
    arr = np.asarray(Image.open(path))
    if arr.ndim != 2:
        raise InputError(f"{path}: expected a single-channel image, got shape {arr.shape}")
    if arr.dtype == np.uint16:
        return arr
    # Some Pillow versions decode 16-bit grayscale PNGs as mode "I" (int32).
    if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 0xFFFF:
        return arr.astype(np.uint16)
    raise InputError(f"{path}: expected 16-bit grayscale data, got dtype {arr.dtype}")


def write_gray16(path, arr) -> None:
    a = np.asarray(arr)
    if a.ndim != 2:
        raise InputError(f"cannot write {path}: expected a 2D array, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() > 0xFFFF):
        raise InputError(f"cannot write {path}: values outside the 16-bit range")
    Image.fromarray(a.astype(np.uint16)).save(path)


def write_rgb8(path, arr) -> None:
    a = np.asarray(arr)
    if a.ndim != 3 or a.shape[2] != 3:
        raise InputError(f"cannot write {path}: expected an (H, W, 3) array, got shape {a.shape}")
    Image.fromarray(a.astype(np.uint8), mode="RGB").save(path)
