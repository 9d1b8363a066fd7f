"""Indexed binary min-heap of putative firing times (next-reaction method).

All routines are numba-compiled and operate on three parallel arrays:
``heap`` (clock ids in heap order), ``pos`` (heap slot of each clock) and
``key`` (putative time of each clock, +inf when the clock is disabled).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def heap_init(key):
    n = key.shape[0]
    heap = np.arange(n)
    pos = np.arange(n)
    for i in range(n // 2 - 1, -1, -1):
        _sift_down(heap, pos, key, i)
    return heap, pos


@njit(cache=True)
def _sift_up(heap, pos, key, i):
    while i > 0:
        p = (i - 1) >> 1
        if key[heap[i]] < key[heap[p]]:
            a = heap[i]
            b = heap[p]
            heap[i] = b
            heap[p] = a
            pos[b] = i
            pos[a] = p
            i = p
        else:
            break


@njit(cache=True)
def _sift_down(heap, pos, key, i):
    n = heap.shape[0]
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        m = left
        right = left + 1
        if right < n and key[heap[right]] < key[heap[left]]:
            m = right
        if key[heap[m]] < key[heap[i]]:
            a = heap[i]
            b = heap[m]
            heap[i] = b
            heap[m] = a
            pos[b] = i
            pos[a] = m
            i = m
        else:
            break


@njit(cache=True)
def heap_update(heap, pos, key, c, newkey):
    old = key[c]
    key[c] = newkey
    if newkey < old:
        _sift_up(heap, pos, key, pos[c])
    else:
        _sift_down(heap, pos, key, pos[c])


@njit(cache=True)
def redraw(heap, pos, key, c, rate, now, rng):
    """Give clock c a fresh exponential time at the new rate (memoryless)."""
    if rate > 0.0:
        heap_update(heap, pos, key, c, now + rng.standard_exponential() / rate)
    else:
        heap_update(heap, pos, key, c, np.inf)
