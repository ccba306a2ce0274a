"""Deterministic mock sentence encoder.

The mock maps text to a unit vector through a fully specified integer
pipeline so every platform reproduces identical bytes:

1. hash the UTF-8 bytes with FNV-1a (64-bit),
2. fold in the seed and run an xorshift64* generator,
3. map each 64-bit draw to a float in (-1, 1] via its top 53 bits,
4. normalize to unit L2 norm.

Only IEEE-754 multiplies, adds, divides and square roots touch the float
path, all of which are correctly rounded, so the output is bit-stable
across machines.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3
_SEED_SCRAMBLE = 0x9E3779B97F4A7C15
_XORSHIFT_MULT = 0x2545F4914F6CDD1D


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _MASK64
    return value


def _xorshift64star(state: int) -> tuple[int, int]:
    state ^= (state >> 12)
    state ^= (state << 25) & _MASK64
    state ^= (state >> 27)
    return state, (state * _XORSHIFT_MULT) & _MASK64


def mock_encode(text: str, d: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit vector of dimension ``d`` for ``text``.

    Identical text (and seed) produces identical vectors across runs and
    machines; distinct texts are near-orthogonal in expectation.
    """
    if d < 2:
        raise ValueError(f"mock encoder needs d >= 2, got {d}")
    state = fnv1a64(text.encode("utf-8")) ^ ((seed * _SEED_SCRAMBLE) & _MASK64)
    if state == 0:
        state = _XORSHIFT_MULT
    values = np.empty(d, dtype=np.float64)
    for i in range(d):
        state, draw = _xorshift64star(state)
        # top 53 bits -> (0, 1], then to (-1, 1]
        values[i] = 2.0 * (((draw >> 11) + 1) * 2.0**-53) - 1.0
    norm = float(np.sqrt(np.sum(values * values)))
    if norm == 0.0:  # unreachable in practice; keep the contract total
        values[0] = 1.0
        norm = 1.0
    return values / norm
