"""Backend dispatch for the hot point-reduction kernels.

The compiled extension (``stairscan.kernels._native``) is preferred when it
built; otherwise the numpy fallback serves. Both implement identical
contracts — ordering, tie-breaks and accumulation order included — so the
choice only affects speed. ``STAIRSCAN_BACKEND=python`` (or ``native``)
overrides the default; :func:`set_backend` does the same at runtime.
"""
import os

import numpy as np

from . import _python

try:
    from . import _native
except ImportError:  # extension not built; numpy fallback covers everything
    _native = None

_BACKENDS = {"python": _python}
if _native is not None:
    _BACKENDS["native"] = _native


def _default_backend():
    requested = os.environ.get("STAIRSCAN_BACKEND", "auto")
    if requested in _BACKENDS:
        return requested
    return "native" if "native" in _BACKENDS else "python"


_active = _default_backend()


def available_backends():
    """Names of usable backends, e.g. ('native', 'python')."""
    return tuple(sorted(_BACKENDS))


def active_backend():
    return _active


def set_backend(name):
    """Select 'native', 'python' or 'auto'; returns the active backend name."""
    global _active
    if name == "auto":
        _active = "native" if "native" in _BACKENDS else "python"
        return _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name
    return _active


def _impl():
    return _BACKENDS[_active]


def voxel_centroids(xyz, leaf):
    xyz = np.ascontiguousarray(xyz, dtype=np.float64)
    return _impl().voxel_centroids(xyz, float(leaf))


def top_surface_indices(xyz, cell):
    xyz = np.ascontiguousarray(xyz, dtype=np.float64)
    return _impl().top_surface_indices(xyz, float(cell))


def polar_min_range(xyz, z0, z_res, theta_bins, rho_min):
    xyz = np.ascontiguousarray(xyz, dtype=np.float64)
    return _impl().polar_min_range(xyz, float(z0), float(z_res),
                                   int(theta_bins), float(rho_min))


def iepf_split(x, y, d_p, n_min):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _impl().iepf_split(x, y, float(d_p), int(n_min))
