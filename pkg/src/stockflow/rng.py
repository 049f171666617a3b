"""Counter-based deterministic random numbers.

Every draw is a pure function of (global seed, site seed, site id, step
index), so identical runs are bit-identical regardless of evaluation order,
threading, or which branches of IF THEN ELSE were taken.  The mixer is the
SplitMix64 finalizer.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def unit_draw(global_seed: int, site_seed: int, site_id: int, step_index: int) -> float:
    """One value in [0, 1) per (site, step)."""
    base = ((global_seed ^ site_seed) + _GOLDEN * (site_id + 1) + step_index) & _MASK
    return mix64(base) / (1 << 64)


def uniform_draw(
    lo: float,
    hi: float,
    global_seed: int,
    site_seed: int,
    site_id: int,
    step_index: int,
) -> float:
    u = unit_draw(global_seed, site_seed, site_id, step_index)
    return lo + u * (hi - lo)


def seed_to_u64(value: float) -> int:
    """Seed arguments are model constants (floats); fold to a 64-bit word."""
    return int(round(value)) & _MASK
