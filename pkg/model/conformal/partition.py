"""
Partitions of the calibration indices and the per-block level allocation used by
the partitioned constructors.

A partition must be built from (X, A) alone, never from outcomes; the builders here
only look at n (and an optional seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from model.backend.event_hub import warn
from model.core.errors import PartitionError


@dataclass(frozen=True, eq=False)
class IndexPartition:
    """
    Disjoint blocks U_1..U_L covering 0..n-1, in a stable order.

    Attributes:
        blocks (tuple[np.ndarray, ...]): Sorted index arrays, one per block.
        n (int): Size of the covered index set.
    """

    blocks: tuple
    n: int

    @classmethod
    def from_blocks(cls, blocks, n):
        """
        Validates and freezes a list of index collections.

        Raises:
            PartitionError: When blocks overlap, leave an index uncovered, are
                empty, or reference indices outside 0..n-1.
        """
        arrays = tuple(np.sort(np.asarray(block, dtype=np.int64).ravel()) for block in blocks)
        if any(block.size == 0 for block in arrays):
            raise PartitionError("partition blocks must be nonempty")
        joined = np.concatenate(arrays) if arrays else np.empty(0, dtype=np.int64)
        if joined.size and (joined.min() < 0 or joined.max() >= n):
            raise PartitionError(f"partition references indices outside 0..{n - 1}")
        counts = np.bincount(joined, minlength=n)
        if (counts > 1).any():
            raise PartitionError(f"index {int(np.argmax(counts > 1))} appears in two blocks")
        if (counts == 0).any():
            raise PartitionError(f"index {int(np.argmax(counts == 0))} is not covered")
        return cls(blocks=arrays, n=int(n))

    @property
    def n_blocks(self):
        """int: L."""
        return len(self.blocks)

    def block_of(self):
        """np.ndarray: l_i, the block position of every index."""
        labels = np.empty(self.n, dtype=np.int64)
        for position, block in enumerate(self.blocks):
            labels[block] = position
        return labels

    def missing_counts(self, mask):
        """N_l^0 = |U_l intersected with the missing indices| per block."""
        mask = np.asarray(mask)
        return np.array([int((mask[block] == 0).sum()) for block in self.blocks], dtype=np.int64)


def contiguous_partition(n, block_size, shuffle=False, seed=0):
    """
    Splits 0..n-1 into consecutive blocks of block_size (the last may be shorter).

    Args:
        n (int): Number of indices.
        block_size (int): m >= 1.
        shuffle (bool): Cut a seeded permutation instead of the identity order.
        seed (int): Seed of that permutation.
    """
    if block_size < 1:
        raise PartitionError(f"block size must be >= 1, got {block_size}")
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    return IndexPartition.from_blocks(
        [order[start:start + block_size] for start in range(0, n, block_size)], n
    )


def singleton_partition(n):
    """One block per index."""
    return IndexPartition.from_blocks([[i] for i in range(n)], n)


def whole_partition(n):
    """A single block holding every index."""
    return IndexPartition.from_blocks([np.arange(n)], n)


def allocate_levels(missing_counts, alpha, clamp=True):
    """
    alpha_l = N_l^0 * N^(0) * alpha / sum_l' (N_l'^0)^2 for blocks with N_l^0 >= 1.

    Args:
        missing_counts (Sequence[int]): N_l^0 per block.
        alpha (float): Overall level.
        clamp (bool): Clamp levels above 1 to 1, publishing alpha-clamped.

    Returns:
        dict[int, float]: Block position -> alpha_l; blocks without missing
        outcomes are absent.
    """
    counts = [int(c) for c in missing_counts]
    total = sum(counts)
    if total == 0:
        return {}
    squares = math.fsum(c * c for c in counts)
    levels = {
        position: alpha * (count * total / squares)
        for position, count in enumerate(counts)
        if count >= 1
    }
    if clamp:
        clamped = [position for position, level in levels.items() if level > 1]
        if clamped:
            warn(
                "alpha-clamped",
                f"{len(clamped)} block level(s) exceeded 1 and were clamped",
                blocks=tuple(clamped),
            )
            levels = {position: min(level, 1.0) for position, level in levels.items()}
    return levels


def alpha_allocation(partition, alpha, mask, clamp=True):
    """Per-block levels for a partition of a dataset with the given mask."""
    return allocate_levels(partition.missing_counts(mask), alpha, clamp=clamp)
