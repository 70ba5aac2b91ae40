"""Stepper backend selection.

The compiled Cython kernel is used when its extension module imported
successfully; otherwise (or when ``MGPERIODIC_PURE=1`` is set) the
pure-Python twin takes over.  Both expose the same stepping contract and
produce identical trajectories; the compiled one is just fast.
"""

from __future__ import annotations

import os

import numpy as np

from . import _stepper_py
from ._stepper_py import PackedModel, needs_step_checks, pack_model

__all__ = [
    "pack_model",
    "needs_step_checks",
    "backend_name",
    "available_backends",
    "integrate_steps",
]

_FORCE_PURE = os.environ.get("MGPERIODIC_PURE", "").strip() not in ("", "0")

try:
    from . import _native
except ImportError:
    _native = None


def backend_name() -> str:
    """Name of the stepper backend active for integrations."""
    if _native is not None and not _FORCE_PURE:
        return _native.BACKEND_NAME
    return _stepper_py.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    names = [_stepper_py.BACKEND_NAME]
    if _native is not None:
        names.append(_native.BACKEND_NAME)
    return tuple(names)


def _flatten(pk: PackedModel) -> dict:
    """Lower a packed model to the flat arrays the compiled kernel wants."""
    fkind, fa0 = [], []
    hoff, hlen, hj, hc, hs = [], [], [], [], []
    soff, slen, sval, sslope = [], [], [], []
    for kind, a0, fj, fc, fs, vals, slopes in pk.funcs:
        fkind.append(kind)
        fa0.append(a0)
        hoff.append(len(hj))
        hlen.append(len(fj))
        hj.extend(fj)
        hc.extend(fc)
        hs.extend(fs)
        soff.append(len(sval))
        slen.append(len(vals))
        sval.extend(vals)
        sslope.extend(slopes)
    return {
        "T": pk.T, "M": pk.M,
        "lam": np.asarray(pk.lam), "m": np.asarray(pk.m), "n": np.asarray(pk.n),
        "fkind": np.asarray(fkind, dtype=np.intc),
        "fa0": np.asarray(fa0, dtype=float),
        "hoff": np.asarray(hoff, dtype=np.intc),
        "hlen": np.asarray(hlen, dtype=np.intc),
        "hj": np.asarray(hj, dtype=float),
        "hc": np.asarray(hc, dtype=float),
        "hs": np.asarray(hs, dtype=float),
        "soff": np.asarray(soff, dtype=np.intc),
        "slen": np.asarray(slen, dtype=np.intc),
        "sval": np.asarray(sval, dtype=float),
        "sslope": np.asarray(sslope, dtype=float),
        "delay_ids": np.asarray(pk.delay_ids, dtype=np.intc),
    }


def integrate_steps(pk: PackedModel, mode: int, t0: float, t1: float,
                    h: float, v0: float, hist_const: float, hist_fn,
                    check_steps: bool, max_splits: int = 65536,
                    backend: str | None = None):
    """Dispatch one integration to the selected (or active) backend."""
    if backend is None:
        backend = backend_name()
    if _native is not None and backend == _native.BACKEND_NAME:
        flat = getattr(pk, "_flat", None)
        if flat is None:
            flat = _flatten(pk)
            pk._flat = flat
        return _native.integrate_steps(flat, mode, t0, t1, h, v0,
                                       hist_const, hist_fn, check_steps,
                                       max_splits)
    if backend != _stepper_py.BACKEND_NAME:
        raise ValueError(f"unknown backend {backend!r}; "
                         f"available: {available_backends()}")
    return _stepper_py.integrate_steps(pk, mode, t0, t1, h, v0,
                                       hist_const, hist_fn, check_steps,
                                       max_splits)
