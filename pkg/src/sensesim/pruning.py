"""Magnitude pruning with per-kernel load balancing.

CONV kernels are pruned independently so every kernel keeps the same number
of nonzeros (the top |value| entries); that equalizes per-PE work in the
systolic array, because blocking time per step is set by the largest kernel
nonzero count. FC matrices are pruned globally by magnitude instead; their
per-column imbalance is handled later by column clustering.

Ties in |value| keep the lower row-major index, which makes pruning
deterministic and makes supports nest across keep fractions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSpec
from .model import Tensor


class PruneDecision(enum.Enum):
    CONTINUE = "continue_pruning"
    STOP = "stop"


@dataclass
class PruneSpec:
    conv_keep_fraction: float = 0.5
    fc_keep_fraction: float = 0.2
    per_layer: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        for f in (self.conv_keep_fraction, self.fc_keep_fraction, *self.per_layer.values()):
            if not 0.0 < f <= 1.0:
                raise BadSpec(f"keep fraction {f} outside (0, 1]")

    def fraction_for(self, kind: str, layer_name: str = "") -> float:
        if layer_name in self.per_layer:
            return self.per_layer[layer_name]
        return self.conv_keep_fraction if kind == "CONV" else self.fc_keep_fraction


@dataclass
class PruneReport:
    kind: str
    keep_fraction: float
    keep_count: int
    achieved_sparsity: float
    per_kernel_nnz: np.ndarray  # CONV: (C_o, C_i); FC: per-column counts (C_i,)
    nnz_max: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "keep_fraction": self.keep_fraction,
            "keep_count": self.keep_count,
            "achieved_sparsity": self.achieved_sparsity,
            "per_kernel_nnz": self.per_kernel_nnz.tolist(),
            "nnz_max": self.nnz_max,
        }


def keep_count(fraction: float, n_elements: int) -> int:
    """Kept elements per kernel: round-half-up, at least 1."""
    if not 0.0 < fraction <= 1.0:
        raise BadSpec(f"keep fraction {fraction} outside (0, 1]")
    return max(1, int(math.floor(fraction * n_elements + 0.5)))


def _as_array(weights) -> np.ndarray:
    return weights.data if isinstance(weights, Tensor) else np.asarray(weights)


def prune_conv_layer(weights, fraction: float) -> tuple[np.ndarray, PruneReport]:
    """Keep the top-|value| fraction of every (C_o, C_i) kernel independently.

    Kernels that already hold fewer nonzeros than the budget are left
    unchanged. Surviving values are bit-identical to the originals.
    """
    w = _as_array(weights)
    if w.ndim != 4:
        raise BadSpec(f"expected weights of shape (C_o, C_i, H_k, W_k), got {w.shape}")
    c_o, c_i, h_k, w_k = w.shape
    k = h_k * w_k
    n_keep = keep_count(fraction, k)

    flat = w.reshape(c_o * c_i, k)
    # Stable sort on -|v| keeps the lower row-major index first among ties.
    order = np.argsort(-np.abs(flat).astype(np.int32), axis=1, kind="stable")
    keep_mask = np.zeros_like(flat, dtype=bool)
    np.put_along_axis(keep_mask, order[:, :n_keep], True, axis=1)
    pruned = np.where(keep_mask, flat, 0).astype(np.int16).reshape(w.shape)

    per_kernel = np.count_nonzero(pruned.reshape(c_o, c_i, k), axis=2)
    report = PruneReport(
        kind="CONV",
        keep_fraction=fraction,
        keep_count=n_keep,
        achieved_sparsity=1.0 - np.count_nonzero(pruned) / pruned.size,
        per_kernel_nnz=per_kernel,
        nnz_max=int(per_kernel.max()),
    )
    return pruned, report


def prune_fc_layer(weights, fraction: float) -> tuple[np.ndarray, PruneReport]:
    """Keep the globally largest-|value| fraction of an FC matrix."""
    w = _as_array(weights)
    if w.ndim != 2:
        raise BadSpec(f"expected an FC matrix of shape (C_o, C_i), got {w.shape}")
    n_keep = keep_count(fraction, w.size)
    flat = w.ravel()
    order = np.argsort(-np.abs(flat).astype(np.int32), kind="stable")
    keep_mask = np.zeros(flat.size, dtype=bool)
    keep_mask[order[:n_keep]] = True
    pruned = np.where(keep_mask, flat, 0).astype(np.int16).reshape(w.shape)

    per_column = np.count_nonzero(pruned, axis=0)
    report = PruneReport(
        kind="FC",
        keep_fraction=fraction,
        keep_count=n_keep,
        achieved_sparsity=1.0 - np.count_nonzero(pruned) / pruned.size,
        per_kernel_nnz=per_column,
        nnz_max=int(per_column.max()),
    )
    return pruned, report


def retrain_hook(weights, accuracy_budget=None) -> PruneDecision:
    """Pluggable accuracy-recovery hook; the default is a pass-through.

    Real retraining is out of scope, but the prune/check/continue control
    flow stays structurally present so a caller can wire in a real check.
    """
    return PruneDecision.CONTINUE


def prune_conv_iterative(
    weights,
    target_fraction: float,
    steps: int = 1,
    hook=retrain_hook,
    accuracy_budget=None,
):
    """Prune in `steps` tightening passes, consulting the hook after each.

    The hook sees the intermediate tensor; returning STOP halts early. With
    the default hook this collapses to one-shot pruning at target_fraction.
    Returns (pruned, report, hook_invocations).
    """
    if steps < 1:
        raise BadSpec("steps must be >= 1")
    w = _as_array(weights)
    pruned, report = w, None
    invocations = 0
    for i in range(1, steps + 1):
        if i == steps:
            frac = target_fraction
        else:
            frac = 1.0 - (1.0 - target_fraction) * (i / steps)
        pruned, report = prune_conv_layer(pruned, frac)
        invocations += 1
        if hook(pruned, accuracy_budget) is PruneDecision.STOP:
            break
    return pruned, report, invocations
