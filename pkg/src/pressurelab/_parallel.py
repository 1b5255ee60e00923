"""Chunked sample streams and order-fixed reductions.

Samples are generated in fixed-size chunks whose random state depends only on
``(seed, chunk index)``. Work on chunks may run on any number of threads, but
partial results are always combined in the same pairwise tree, so every
reduction is bit-identical for a given seed regardless of ``threads``.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 1 << 15


def default_threads():
    return os.cpu_count() or 1


def chunk_slices(N, chunk_size=CHUNK_SIZE):
    return [(start, min(start + chunk_size, N)) for start in range(0, N, chunk_size)]


def uniform_chunk(d, seed, index, size):
    """Uniform points of chunk ``index``; a prefix of any longer request."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    rng = np.random.default_rng([int(seed), int(index)])
    return rng.random((size, d))


def map_chunks(fn, N, threads=None, chunk_size=CHUNK_SIZE):
    """Apply ``fn(index, start, stop)`` to every chunk; results in chunk order."""
    slices = chunk_slices(N, chunk_size)
    threads = threads or default_threads()
    if threads == 1 or len(slices) == 1:
        return [fn(i, a, b) for i, (a, b) in enumerate(slices)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, a, b) for i, (a, b) in enumerate(slices)]
        return [f.result() for f in futures]


def tree_reduce(items, combine):
    items = list(items)
    if not items:
        raise ValueError("nothing to reduce")
    while len(items) > 1:
        nxt = [combine(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def lse_partial(logw, masks=()):
    """Shifted exponential sums of one chunk.

    Returns ``(shift, total, total_of_squares, masked_totals)``. All sums share
    the chunk max as shift, so a masked sum never exceeds the sum over a
    superset mask.
    """
    shift = np.max(logw, axis=0)
    e = np.exp(logw - shift)
    total = e.sum(axis=0)
    squares = (e * e).sum(axis=0)
    masked = tuple(np.where(m, e, 0.0).sum(axis=0) for m in masks)
    return shift, total, squares, masked


def lse_combine(a, b):
    shift = np.maximum(a[0], b[0])
    fa = np.exp(a[0] - shift)
    fb = np.exp(b[0] - shift)
    total = a[1] * fa + b[1] * fb
    squares = a[2] * fa * fa + b[2] * fb * fb
    masked = tuple(x * fa + y * fb for x, y in zip(a[3], b[3]))
    return shift, total, squares, masked
