"""Channel clustering: rank channels by nonzero count, group look-alikes.

A systolic step over a group of concurrent channels is blocked by the group's
largest nonzero count, so sorting channels by count (descending) and grouping
consecutive runs puts expensive channels together and minimizes the sum of
per-group maxima over all contiguous groupings. The reorder is modeled as a
pure permutation with an inverse map (the hardware's crossbar + FIFOs), so it
never changes functional results, only timing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitmap import CompressedBlock
from .errors import ShapeMismatch


@dataclass
class ChannelRanking:
    order: np.ndarray  # permutation: order[k] = original index of rank-k channel
    nze_counts: np.ndarray  # per-channel counts, original indexing
    group_size: int

    def __post_init__(self):
        self.order = np.asarray(self.order, dtype=np.int64)
        self.nze_counts = np.asarray(self.nze_counts, dtype=np.int64)
        if self.group_size < 1:
            raise ShapeMismatch("group size must be >= 1")
        if sorted(self.order.tolist()) != list(range(self.nze_counts.size)):
            raise ShapeMismatch("order is not a permutation of the channel indices")
        ranked = self.nze_counts[self.order]
        if np.any(np.diff(ranked) > 0):
            raise ShapeMismatch("ranking must be nonincreasing in count")


def _counts_of(per_channel) -> np.ndarray:
    counts = []
    for item in per_channel:
        if isinstance(item, CompressedBlock):
            counts.append(item.data_length)
        else:
            counts.append(int(item))
    if not counts:
        raise ShapeMismatch("need at least one channel")
    return np.asarray(counts, dtype=np.int64)


def rank_channels(per_channel_blocks, group_size: int = 32) -> ChannelRanking:
    """Stable descending sort by nonzero count; ties keep ascending index."""
    counts = _counts_of(per_channel_blocks)
    order = np.argsort(-counts, kind="stable")
    return ChannelRanking(order, counts, group_size)


def make_groups(ranking: ChannelRanking) -> list[list[int]]:
    """Consecutive runs of group_size channels from the ranked order."""
    g = ranking.group_size
    order = ranking.order.tolist()
    return [order[i : i + g] for i in range(0, len(order), g)]


def identity_groups(n_channels: int, group_size: int) -> list[list[int]]:
    """Grouping in original channel order (the unclustered baseline)."""
    return [list(range(i, min(i + group_size, n_channels))) for i in range(0, n_channels, group_size)]


def apply_layout(channels, ranking: ChannelRanking):
    """Physically reorder per-channel data into ranked order.

    Returns (permuted, inverse) where inverse[original_index] = new position;
    indexing the permuted store with inverse restores original identity.
    """
    order = ranking.order
    if len(channels) != order.size:
        raise ShapeMismatch("channel count does not match the ranking")
    if isinstance(channels, np.ndarray):
        permuted = channels[order]
    else:
        permuted = [channels[i] for i in order]
    inverse = np.empty(order.size, dtype=np.int64)
    inverse[order] = np.arange(order.size)
    return permuted, inverse


def grouped_max_sum(counts, group_size: int, order=None) -> int:
    """Sum of per-group maxima for contiguous groups of the given order.

    This is the layer's step-cycle total in units of one nonzero's work when
    every kernel count is 1; the clustering objective is its minimization.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if order is None:
        seq = counts
    else:
        seq = counts[np.asarray(order, dtype=np.int64)]
    total = 0
    for i in range(0, seq.size, group_size):
        total += int(seq[i : i + group_size].max())
    return total
