"""Attention kernel backends: compiled Cython core with a numpy fallback.

The backend is selected once at import. ``SURGACT_KERNEL`` overrides the
choice: ``auto`` (default, prefer the compiled extension), ``cython``, or
``numpy``. ``benchmarks/bench_attention.py`` compares the two.
"""

from __future__ import annotations

import contextlib
import os

from . import attention_numpy

_BACKENDS = {"numpy": attention_numpy}

try:
    from . import _attn_cy

    _BACKENDS["cython"] = _attn_cy
except ImportError:  # extension not built; numpy fallback serves
    _attn_cy = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def _select_default():
    requested = os.environ.get("SURGACT_KERNEL", "auto").lower()
    if requested == "auto":
        return _BACKENDS.get("cython", attention_numpy)
    return get_backend(requested)


_active = _select_default()


def backend_name() -> str:
    return _active.NAME


def set_backend(name: str) -> None:
    global _active
    _active = get_backend(name)


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the active backend (tests, benchmarks)."""
    global _active
    previous = _active
    _active = get_backend(name)
    try:
        yield _active
    finally:
        _active = previous


def attn_forward(q, k, v):
    return _active.attn_forward(q, k, v)


def attn_backward(d_out, attn, q, k, v):
    return _active.attn_backward(d_out, attn, q, k, v)
