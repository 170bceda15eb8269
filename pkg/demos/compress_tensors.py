"""Bitmap compression: one presence bit per element plus the nonzero values.

A block costs 2 + ceil(rows*cols/8) + 2*nnz bytes, so the format wins
whenever a block is much below half dense. The demo packs a pruned layer
into a container file and reads it back bit for bit.
"""

import tempfile
from pathlib import Path

import numpy as np

import sensesim as ss

block = np.array([[0, 5, 0], [-3, 0, 0], [0, 0, 7]], dtype=np.int16)
cb = ss.compress(block)
print(f"block:\n{block}")
print(f"bitmap bits: {cb.bitmap.tolist()}")
print(f"values:      {cb.values.tolist()}")
print(f"{block.nbytes} dense bytes -> {ss.compressed_size_bytes(cb)} compressed")
assert np.array_equal(ss.decompress(cb), block)

# Size as a function of sparsity for a 7x7 activation tile.
print("\n7x7 tile bytes by sparsity:")
for s in (0.0, 0.25, 0.5, 0.75, 0.9):
    tile = ss.synth_tensor((7, 7), s, seed=int(s * 100)).data
    sz = ss.compressed_size_bytes(ss.compress(tile))
    bar = "#" * (sz // 4)
    print(f"  s={s:<5} {sz:>4} B {bar}")

# A sparse feature map round-trips through one container file, one block
# per channel plane. Tiny blocks (3x3 kernels) can cost more than dense
# because of the fixed header and index entry; plane-sized blocks win big.
ifm = ss.synth_tensor((6, 14, 14), 0.7, seed=3).data
blocks = [ss.compress(ch) for ch in ifm]

with tempfile.TemporaryDirectory() as td:
    path = Path(td) / "ifm.sbm"
    total = ss.write_blocks(path, blocks)
    back = ss.read_blocks(path)
    assert all(np.array_equal(ss.decompress(a), ss.decompress(b))
               for a, b in zip(blocks, back))
    print(f"\n{len(blocks)} channel planes, {ifm.nbytes} dense bytes "
          f"-> {total} on disk ({ifm.nbytes / total:.2f}x smaller)")
