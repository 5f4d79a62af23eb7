import math

import numpy as np

from utils.error_handler import ValidationError


def log2_binomial(n, k):
    """log2 of the binomial coefficient C(n, k)"""
    return math.log2(math.comb(n, k))


def mask_matrix(masks, width):
    """Boolean (len(masks), width) table of the bits of each mask"""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(width, dtype=np.int64)[None, :]) & 1).astype(bool)


def as_complex_matrix(values, name="matrix"):
    """Convert to a 2-D complex128 array, rejecting NaN/Inf entries"""
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def frozen(arr):
    """Read-only view so shared arrays cannot be mutated in place"""
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr
