"""Counter-based random streams for reproducible parallel trials.

Every random draw in a run is addressed by (experiment seed, trial index,
step index).  Trials use disjoint Philox keys, and within a trial each step
owns a fixed-size block of raw 64-bit outputs, so any step can be replayed
in isolation with `step_uniforms` without running the steps before it.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

# Philox.advance() moves the counter in units of 4 raw 64-bit outputs, so
# per-step blocks are padded to a multiple of 4.
_RAWS_PER_ADVANCE = 4


def draws_per_step(dim: int) -> int:
    """Raw 64-bit draws reserved per iteration for a dim-dimensional run."""
    need = dim + 2
    return _RAWS_PER_ADVANCE * ((need + _RAWS_PER_ADVANCE - 1) // _RAWS_PER_ADVANCE)


def _bit_generator(seed: int, trial: int) -> Philox:
    return Philox(key=[np.uint64(seed), np.uint64(trial)])


def trial_generator(seed: int, trial: int) -> Generator:
    """A numpy Generator on the (seed, trial) substream.

    Consumption is whatever the caller makes of it; use the block helpers
    below when fixed per-step consumption matters.
    """
    return Generator(_bit_generator(seed, trial))


def _raw_to_uniform(raw: np.ndarray) -> np.ndarray:
    # 53-bit mantissa, shifted into the open interval (0, 1) so inverse-CDF
    # transforms stay finite.
    return (np.right_shift(raw, np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniform_block(seed: int, trial: int, T: int, dim: int) -> np.ndarray:
    """Uniforms for steps 1..T, shape (T, draws_per_step(dim)).

    Row t-1 is exactly the block that `step_uniforms(seed, trial, t, dim)`
    returns.
    """
    dps = draws_per_step(dim)
    raw = _bit_generator(seed, trial).random_raw(T * dps)
    return _raw_to_uniform(raw).reshape(T, dps)


def step_uniforms(seed: int, trial: int, t: int, dim: int) -> np.ndarray:
    """Replay the uniforms of step t (1-based) without generating steps < t."""
    if t < 1:
        raise ValueError("step index must be >= 1")
    dps = draws_per_step(dim)
    bg = _bit_generator(seed, trial)
    bg.advance((t - 1) * dps // _RAWS_PER_ADVANCE)
    return _raw_to_uniform(bg.random_raw(dps))
