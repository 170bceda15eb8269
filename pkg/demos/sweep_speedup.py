"""Sparsity sweeps on the synthetic three-layer roster.

Weight sparsity bought by balanced pruning converts directly into speedup:
every kernel keeps the same count, so cycles scale with the kept fraction
and speedup is exactly 1/(1-s). IFM sparsity is unstructured, so residual
imbalance between concurrent channels keeps the realized speedup under that
bound.
"""

import sensesim as ss

opts = ss.SimOptions(seed=0)
grid = [round(0.1 * i, 1) for i in range(10)]

print("weight sparsity sweep (IFM dense):")
print(f"{'s':>4} {'cycles':>7} {'speedup':>8} {'bound':>7} {'energy':>7}")
for s, row in zip(grid, ss.sweep("weight_sparsity", grid, opts).rows):
    bound = 1.0 / (1.0 - s)
    print(f"{s:>4} {row['cycles']:>7} {row['speedup']:>8.3f} {bound:>7.3f} "
          f"{row['energy_saving']:>7.3f}")

print("\nIFM sparsity sweep (weights dense):")
print(f"{'s':>4} {'cycles':>7} {'speedup':>8} {'bound':>7}")
for s, row in zip(grid, ss.sweep("ifm_sparsity", grid, opts).rows):
    bound = 1.0 / (1.0 - s)
    flag = "" if row["speedup"] <= bound else "  !!"
    print(f"{s:>4} {row['cycles']:>7} {row['speedup']:>8.3f} {bound:>7.3f}{flag}")

print("\narray size sweep (same work, more lanes):")
for row in ss.sweep("pe_size", [8, 16, 32], opts).rows:
    print(f"  {row['pe_size']:>2}x{row['pe_size']:<2} -> {row['cycles']:>7} cycles, "
          f"U_PE {row['u_pe']:.3f}")
