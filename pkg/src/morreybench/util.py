"""Shared plumbing: error taxonomy, robust power means, deterministic RNG and maps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


class ParameterError(ValueError):
    """A precondition or exponent relation is violated (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """A computation cannot be completed at finite precision (CLI exit code 3)."""


def power_mean(values, exponent: float) -> float:
    """Return ``(mean(values**e))**(1/e)`` without overflow for large ``|e|``.

    Intermediates are shifted by the extreme value so they stay within [0, 1];
    as ``e`` grows the result tends smoothly to ``max(values)`` (resp. ``min``
    for ``e < 0``), which is the essential-sup convention used by the weight
    characteristics.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        raise ParameterError("power mean of an empty cell set")
    e = float(exponent)
    if e == 0.0:
        raise ParameterError("power mean exponent must be nonzero")
    if e > 0:
        anchor = float(vals.max())
        if anchor == 0.0:
            return 0.0
    else:
        anchor = float(vals.min())
        if anchor <= 0.0:
            raise ParameterError("nonpositive value raised to negative power")
    mean = float(np.mean((vals / anchor) ** e))
    return anchor * mean ** (1.0 / e)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator: (seed, stream ids) fully determine the draws."""
    ss = np.random.SeedSequence([int(seed), *(int(s) for s in stream)])
    return np.random.Generator(np.random.Philox(ss))


def thread_count() -> int:
    raw = os.environ.get("MORREY_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def parallel_map(fn, items):
    """Map preserving input order; MORREY_THREADS > 1 enables a thread pool.

    Each item must be independent of the others; results are merged in input
    order so the output is identical to a sequential run.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fmt(x: float) -> str:
    """Shortest round-trip decimal form, used for all CSV/report output."""
    return repr(float(x))
