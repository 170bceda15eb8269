"""DRAM reuse strategies across a network's depth.

Early layers have big activations and few weights, so the weights stay on
chip (or are cheap to re-read per IFM tile). Late layers flip: tiny
activations, huge weight matrices, stream the weights exactly once and hold
the IFM. The adaptive choice takes whichever candidate moves fewer bytes.
"""

import sensesim as ss

KIB = 1024.0
CAPACITY = 128 * KIB

# (label, I_mem, W_mem, ifm row tiles, ifm col tiles, OC batches)
LAYERS = [
    ("early conv", 196 * KIB, 36 * KIB, 2, 2, 8),
    ("mid conv", 98 * KIB, 144 * KIB, 4, 4, 4),
    ("late conv", 24.5 * KIB, 1.99 * KIB * KIB, 1, 1, 16),
]

print(f"{'layer':<12} {'candidates (KiB)':<46} chosen")
for label, i_mem, w_mem, t_r, t_c, t_oc in LAYERS:
    cands = ss.dram_cost(i_mem, w_mem, t_r, t_c, t_oc, weight_buffer_capacity=CAPACITY)
    decision = ss.choose_strategy(cands, i_mem, w_mem)
    shown = ", ".join(f"{k} {v / KIB:,.0f}" for k, v in sorted(cands.items()))
    print(f"{label:<12} {shown:<46} {decision.strategy} "
          f"({decision.d_mem / KIB:,.0f} KiB)")

# The same choice falls out of a full layer schedule. Records hold the IFM
# with padding already materialized.
from sensesim.model import pad_hw

cfg = ss.LayerConfig(kind="CONV", C_i=8, C_o=16, H_i=14, W_i=14,
                     H_k=3, W_k=3, pad=1, name="demo")
ifm = ss.synth_tensor(cfg.ifm_dims(), 0.5, seed=1, roles=cfg.ifm_roles())
weights = ss.synth_tensor(cfg.weight_dims(), 0.6, seed=2, roles=cfg.weight_roles())
rec = ss.LayerRecord(cfg, ss.Tensor(pad_hw(ifm.data, cfg.pad), ifm.roles), weights)
sched = ss.build_schedule(rec, n_is=7, n_pe=8, weight_buffer_capacity=2048)
print(f"\nscheduled demo layer: {sched.decision.strategy}, "
      f"D_mem {sched.decision.d_mem:,.0f} bytes, "
      f"loop order {sched.loop_order}")
