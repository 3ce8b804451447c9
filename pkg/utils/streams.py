"""Counter-based random substreams and ordered trial blocks.

A substream is addressed by (master seed, purpose, integer key...) and is
independent of the order in which streams are requested, so any trial can be
replayed in isolation and workers never share generator state.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np

from utils.errors import LabError

_R = TypeVar("_R")

STREAM_PURPOSES = {
    "field": 1,
    "field-batch": 2,
    "noise": 3,
    "noise-batch": 4,
    "scratch": 5,
}


def zigzag(value: int) -> int:
    """Map a signed integer to a nonnegative one (0, -1, 1, -2, ... -> 0, 1, 2, 3, ...)."""
    value = int(value)
    return 2 * value if value >= 0 else -2 * value - 1


def substream(seed: int, purpose: str, *key: int) -> np.random.Generator:
    if seed < 0:
        raise LabError(f"master seed must be nonnegative, got {seed}")
    try:
        tag = STREAM_PURPOSES[purpose]
    except KeyError:
        raise LabError(f"unknown stream purpose '{purpose}'") from None
    sequence = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(tag, *(zigzag(k) for k in key))
    )
    return np.random.Generator(np.random.Philox(sequence))


def trial_blocks(trials: int, block_size: int) -> List[Tuple[int, int, int]]:
    """Split ``trials`` into (block index, first trial, size) triples."""
    if trials < 0 or block_size < 1:
        raise LabError(f"invalid trial blocking: trials={trials}, block={block_size}")
    blocks = []
    for index, start in enumerate(range(0, trials, block_size)):
        blocks.append((index, start, min(block_size, trials - start)))
    return blocks


def map_blocks(
    func: Callable[[Tuple[int, int, int]], _R],
    blocks: Sequence[Tuple[int, int, int]],
    workers: int = 1,
) -> List[_R]:
    """Evaluate ``func`` on every block; results come back in block order."""
    if workers <= 1 or len(blocks) <= 1:
        return [func(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, blocks))
