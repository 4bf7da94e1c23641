"""Input validation helpers shared by the functional core and the estimators.

sklearn's ``check_array`` rejects complex input, so complex vectors are
validated here instead.
"""

import numpy as np

from .exceptions import DimensionError, InvalidConfigError

UNIT_MODULUS_TOL = 1e-9


def as_complex_vector(x, name="x", length=None):
    """Return ``x`` as a finite 1-D complex128 array, optionally of fixed length."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if length is not None and arr.shape[0] != length:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def as_complex_matrix(X, name="X", n_features=None):
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if n_features is not None and arr.shape[1] != n_features:
        raise DimensionError(
            f"{name} has {arr.shape[1]} columns, expected {n_features}"
        )
    return arr


def check_unit_modulus(x, name="x", tol=UNIT_MODULUS_TOL):
    """Validate |x_k| = 1 within ``tol`` and return the exactly renormalized vector."""
    dev = np.max(np.abs(np.abs(x) - 1.0)) if x.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} violates the unit-modulus constraint (max deviation {dev:.3g})")
    return x / np.abs(x)


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise InvalidConfigError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_nonnegative(value, name):
    if not np.isfinite(value) or value < 0:
        raise InvalidConfigError(f"{name} must be nonnegative, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InvalidConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def unit_phase(x, previous):
    """Elementwise exp(i*angle(x)); entries with x == 0 keep ``previous``."""
    mag = np.abs(x)
    out = np.array(previous, dtype=np.complex128)
    nz = mag > 0
    out[nz] = x[nz] / mag[nz]
    return out
