"""Cycle-approximate simulator for a sparse systolic CNN accelerator.

The pipeline: prune weights with a load-balance constraint (pruning), pack
tensors into bitmap blocks (bitmap), cluster channels by density
(clustering), execute the weight-oriented sparse dataflow functionally
(engine), pick tiling and DRAM reuse strategies (dataflow), account cycles,
utilization and energy (timing), and drive whole networks plus parameter
sweeps (report). The cli module exposes all of it as subcommands.
"""

from .bitmap import (
    CompressedBlock,
    block_bytes,
    compress,
    compress_fc_column,
    compressed_size_bytes,
    decompress,
    decompress_coords,
    decompress_fc_column,
    read_blocks,
    write_blocks,
)
from .clustering import (
    ChannelRanking,
    apply_layout,
    grouped_max_sum,
    identity_groups,
    make_groups,
    rank_channels,
)
from .dataflow import (
    DEFAULT_WEIGHT_BUFFER_BYTES,
    FITS,
    RIF,
    RWF,
    LayerSchedule,
    ReuseDecision,
    TilingPlan,
    build_schedule,
    choose_strategy,
    dram_cost,
    ifm_mem_bytes,
    make_tiling,
    weight_mem_bytes,
)
from .engine import (
    MacEvent,
    conv_out_dims,
    dense_conv_oracle,
    dense_fc_oracle,
    maxpool2d,
    relu,
    run_layer,
    run_scheduled,
    saturate_int16,
    sparse_conv_layer,
    sparse_conv_tile,
    sparse_fc_column_step,
    sparse_fc_layer,
)
from .errors import SenseSimError
from .model import (
    CONV,
    FC,
    LayerConfig,
    LayerRecord,
    NetworkDescriptor,
    Tensor,
    load_network,
    read_raw_tensor,
    save_network,
    synth_tensor,
    write_raw_tensor,
)
from .pruning import (
    PruneDecision,
    PruneReport,
    PruneSpec,
    keep_count,
    prune_conv_iterative,
    prune_conv_layer,
    prune_fc_layer,
)
from .report import (
    CSV_COLUMNS,
    REPORT_VERSION,
    NetworkReport,
    SimOptions,
    SweepResult,
    simulate_network,
    standard_roster,
    sweep,
    write_report,
    write_sweep_csv,
)
from .timing import (
    EnergyReport,
    LayerTiming,
    ModePolicy,
    StepCost,
    UtilizationReport,
    conv_layer_timing,
    energy_model,
    fc_layer_timing,
    select_mode,
    simulate_layer_timing,
    step_cost,
    utilization,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "CONV", "FC", "LayerConfig", "LayerRecord", "NetworkDescriptor", "Tensor",
    "load_network", "save_network", "read_raw_tensor", "write_raw_tensor", "synth_tensor",
    # bitmap
    "CompressedBlock", "compress", "decompress", "decompress_coords",
    "compress_fc_column", "decompress_fc_column", "block_bytes",
    "compressed_size_bytes", "read_blocks", "write_blocks",
    # pruning
    "PruneSpec", "PruneReport", "PruneDecision", "keep_count",
    "prune_conv_layer", "prune_fc_layer", "prune_conv_iterative",
    # clustering
    "ChannelRanking", "rank_channels", "make_groups", "identity_groups",
    "apply_layout", "grouped_max_sum",
    # engine
    "MacEvent", "conv_out_dims", "sparse_conv_tile", "sparse_conv_layer",
    "sparse_fc_layer", "sparse_fc_column_step", "dense_conv_oracle",
    "dense_fc_oracle", "run_layer",
    "run_scheduled", "relu", "maxpool2d", "saturate_int16",
    # dataflow
    "RIF", "RWF", "FITS", "DEFAULT_WEIGHT_BUFFER_BYTES", "TilingPlan",
    "LayerSchedule", "ReuseDecision", "make_tiling", "ifm_mem_bytes",
    "weight_mem_bytes", "dram_cost", "choose_strategy", "build_schedule",
    # timing
    "ModePolicy", "select_mode", "StepCost", "step_cost", "LayerTiming",
    "UtilizationReport", "utilization", "conv_layer_timing", "fc_layer_timing",
    "simulate_layer_timing", "EnergyReport", "energy_model",
    # report
    "REPORT_VERSION", "CSV_COLUMNS", "SimOptions", "NetworkReport",
    "SweepResult", "simulate_network", "standard_roster", "sweep",
    "write_report", "write_sweep_csv",
    # errors
    "SenseSimError",
]
