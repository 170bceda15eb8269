"""Walk one IFM block and one kernel through the weight-oriented dataflow.

The array pairs every nonzero weight with every nonzero IFM element and
derives the output address from the coordinate difference. Pairs whose
difference is negative or not divisible by the stride burn the cycle
without writing anything, so you can see the cost of irregularity directly
in the event log.
"""

import numpy as np

import sensesim as ss

ifm = np.zeros((4, 4), dtype=np.int16)
np.fill_diagonal(ifm, [10, 20, 30, 40])

kernel = np.zeros((2, 2), dtype=np.int16)
kernel[0, 0] = 10
kernel[1, 1] = 20

print("IFM block:")
print(ifm)
print("kernel:")
print(kernel)

h_o, w_o = ss.conv_out_dims(4, 4, 2, 2, stride=1)
psum, events = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(kernel), h_o, w_o, stride=1)

print(f"\n{'cycle':>5} {'i_val':>5} {'w_val':>5}  addr")
for ev in events:
    addr = "INVALID" if ev.addr is None else f"{ev.addr}"
    print(f"{ev.cycle:>5} {ev.i_val:>5} {ev.w_val:>5}  {addr}")

print("\nnonzero psum entries:")
for addr in np.flatnonzero(psum):
    r, c = divmod(int(addr), w_o)
    print(f"  addr {addr} -> output ({r}, {c}) = {psum[addr]}")

dense_cycles = ifm.size * kernel.size
print(f"\nsparse cycles: {len(events)}  dense cycles: {dense_cycles}  "
      f"speedup: {dense_cycles / len(events):.1f}x")

# the dense reference agrees entry for entry
oracle = ss.dense_conv_oracle(ifm[None], kernel[None, None], stride=1)
assert np.array_equal(psum.reshape(h_o, w_o), oracle[0])
print("matches the dense oracle")
