"""Load-balanced pruning and why the balance constraint matters.

Plain magnitude pruning leaves kernels with unequal nonzero counts. PEs run
in lockstep, so a step lasts as long as its busiest kernel; equalizing the
counts removes that idle time at the same overall sparsity.
"""

import numpy as np

import sensesim as ss


def main() -> None:
    w = ss.synth_tensor((4, 3, 3, 3), sparsity=0.0, seed=5).data
    pruned, report = ss.prune_conv_layer(w, 4 / 9)

    print(f"kept {report.keep_count}/9 per kernel, "
          f"sparsity {report.achieved_sparsity:.3f}")
    print(f"per-kernel nonzeros (C_o x C_i):\n{report.per_kernel_nnz}")

    # Two kernels sharing a step, one IFM element each.
    balanced = ss.step_cost([1, 1], [4, 4])
    skewed = ss.step_cost([1, 1], [2, 6])
    print(f"\nbalanced pair:  step {balanced.step_cycles} cycles, "
          f"idle {balanced.total_idle}")
    print(f"skewed pair:    step {skewed.step_cycles} cycles, "
          f"idle {skewed.total_idle}")
    print(f"balancing buys {skewed.step_cycles / balanced.step_cycles:.2f}x "
          "on this step")

    # Iterative tightening reaches the same tensor as one shot when the
    # accuracy hook never asks to stop.
    one_shot, _ = ss.prune_conv_layer(w, 4 / 9)
    stepped, _, calls = ss.prune_conv_iterative(w, 4 / 9, steps=3)
    assert np.array_equal(one_shot, stepped)
    print(f"\niterative schedule converged in {calls} hook calls "
          "to the one-shot result")


if __name__ == "__main__":
    main()
