"""Tensor and network data model: loading, saving, synthesis, padding.

All values are signed 16-bit integers (the quantized on-chip width), so the
sparse compute path can be checked against dense references with exact
equality. Tensor files on disk are little-endian raw int16, row-major, no
header; a JSON descriptor lists the layers and their file references.

Zero padding is materialized when a convolution IFM is loaded, so downstream
compression and address generation never special-case borders. Saving crops
the padding back off, which keeps disk round-trips bit-exact.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyRange,
    GeometryMismatch,
    MissingFile,
    ShapeMismatch,
    ValueOverflow,
)

INT16_MIN = -(2**15)
INT16_MAX = 2**15 - 1

CONV = "CONV"
FC = "FC"

DIM_ROLES = ("OC", "IC", "H", "W")


@dataclass
class Tensor:
    """Dense integer tensor with per-dimension role tags.

    data is a C-ordered (row-major) int16 ndarray; roles tags each dimension
    with one of OC/IC/H/W (None for untagged scratch tensors).
    """

    data: np.ndarray
    roles: tuple[str, ...] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.dtype != np.int16:
            # Accept wider integers only if every value fits the int16 width.
            if not np.issubdtype(self.data.dtype, np.integer):
                raise ValueOverflow("tensor values must be integers")
            if self.data.size and (
                self.data.min() < INT16_MIN or self.data.max() > INT16_MAX
            ):
                raise ValueOverflow("tensor values outside signed 16-bit range")
            self.data = self.data.astype(np.int16)
        if any(d < 1 for d in self.data.shape):
            raise ShapeMismatch(f"every dim extent must be >= 1, got {self.data.shape}")
        if self.roles is not None:
            self.roles = tuple(self.roles)
            if len(self.roles) != self.data.ndim:
                raise ShapeMismatch("one role tag required per dimension")
            for r in self.roles:
                if r not in DIM_ROLES:
                    raise ShapeMismatch(f"unknown dim role {r!r}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def sparsity(self) -> float:
        return 1.0 - self.nnz / self.data.size


@dataclass
class LayerConfig:
    """Shape, stride and padding of one layer.

    FC layers use C_i as input length and C_o as output length; their spatial
    extents are forced to 1 so one output formula covers both kinds.
    """

    kind: str
    C_i: int
    C_o: int
    H_i: int = 1
    W_i: int = 1
    H_k: int = 1
    W_k: int = 1
    stride: int = 1
    pad: int = 0
    name: str = ""

    def __post_init__(self):
        self.kind = self.kind.upper()
        if self.kind not in (CONV, FC):
            raise GeometryMismatch(f"unknown layer kind {self.kind!r}")
        if self.kind == FC:
            self.H_i = self.W_i = self.H_k = self.W_k = 1
            self.stride, self.pad = 1, 0
        if self.C_i < 1 or self.C_o < 1:
            raise GeometryMismatch("channel counts must be >= 1")
        if self.stride < 1 or self.pad < 0:
            raise GeometryMismatch("stride must be >= 1 and pad >= 0")
        if self.H_o < 1 or self.W_o < 1:
            raise GeometryMismatch(
                f"output extents must be >= 1 (H_o={self.H_o}, W_o={self.W_o})"
            )

    @property
    def H_o(self) -> int:
        return (self.H_i + 2 * self.pad - self.H_k) // self.stride + 1

    @property
    def W_o(self) -> int:
        return (self.W_i + 2 * self.pad - self.W_k) // self.stride + 1

    @property
    def H_p(self) -> int:
        """Padded IFM row extent."""
        return self.H_i + 2 * self.pad

    @property
    def W_p(self) -> int:
        return self.W_i + 2 * self.pad

    def ifm_dims(self) -> tuple[int, ...]:
        return (self.C_i,) if self.kind == FC else (self.C_i, self.H_i, self.W_i)

    def ifm_roles(self) -> tuple[str, ...]:
        return ("IC",) if self.kind == FC else ("IC", "H", "W")

    def weight_dims(self) -> tuple[int, ...]:
        if self.kind == FC:
            return (self.C_o, self.C_i)
        return (self.C_o, self.C_i, self.H_k, self.W_k)

    def weight_roles(self) -> tuple[str, ...]:
        if self.kind == FC:
            return ("OC", "IC")
        return ("OC", "IC", "H", "W")


@dataclass
class LayerRecord:
    """One layer's config plus its loaded tensors.

    ifm holds the padded feature map for CONV layers (padding is materialized
    at load time); weights are stored as declared.
    """

    config: LayerConfig
    ifm: Tensor | None = None
    weights: Tensor | None = None
    ifm_file: str | None = None
    weight_file: str | None = None

    def ifm_interior(self) -> np.ndarray:
        """The unpadded feature map (what sparsity statistics refer to)."""
        if self.ifm is None:
            raise MissingFile("layer has no IFM tensor loaded")
        a = self.ifm.data
        p = self.config.pad
        if self.config.kind == CONV and p:
            return a[:, p:-p, p:-p]
        return a

    @property
    def ifm_sparsity(self) -> float:
        a = self.ifm_interior()
        return 1.0 - np.count_nonzero(a) / a.size

    @property
    def weight_sparsity(self) -> float:
        if self.weights is None:
            raise MissingFile("layer has no weight tensor loaded")
        return self.weights.sparsity


@dataclass
class NetworkDescriptor:
    name: str
    layers: list[LayerRecord] = field(default_factory=list)


def pad_hw(a: np.ndarray, pad: int) -> np.ndarray:
    """Symmetric zero padding of the trailing two (H, W) dims."""
    if pad == 0:
        return a
    width = [(0, 0)] * (a.ndim - 2) + [(pad, pad), (pad, pad)]
    return np.pad(a, width)


def crop_hw(a: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return a
    return a[..., pad:-pad, pad:-pad]


def read_raw_tensor(path, dims) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise MissingFile(f"tensor file not found: {p}")
    flat = np.fromfile(p, dtype="<i2")
    n = math.prod(dims)
    if flat.size != n:
        raise ShapeMismatch(
            f"{p} holds {flat.size} values but descriptor declares {n}"
        )
    return flat.astype(np.int16).reshape(dims)


def write_raw_tensor(path, a: np.ndarray) -> None:
    np.ascontiguousarray(a, dtype=np.int16).astype("<i2").tofile(path)


def synth_tensor(dims, sparsity, value_range=(-128, 127), seed=0, roles=None) -> Tensor:
    """Seeded synthetic tensor with an exact zero count.

    Exactly round(sparsity * N) elements are zeroed at uniformly random
    positions; the rest are drawn uniformly from value_range excluding 0, so
    measured sparsity equals the requested one up to rounding. Deterministic
    for a fixed seed.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ShapeMismatch(f"every dim extent must be >= 1, got {dims}")
    if not 0.0 <= sparsity <= 1.0:
        raise GeometryMismatch(f"sparsity must be in [0, 1], got {sparsity}")
    lo, hi = int(value_range[0]), int(value_range[1])
    if lo > hi or (lo == 0 and hi == 0):
        raise EmptyRange(f"value range {value_range} contains no nonzero value")
    if lo < INT16_MIN or hi > INT16_MAX:
        raise ValueOverflow(f"value range {value_range} exceeds signed 16 bits")

    n = math.prod(dims)
    zeros = int(math.floor(sparsity * n + 0.5))
    rng = np.random.default_rng(seed)
    if lo <= 0 <= hi:
        # Draw from [lo, hi-1] then shift the nonnegative half up by one,
        # mapping uniformly onto [lo, hi] \ {0}.
        draw = rng.integers(lo, hi, size=n)
        vals = np.where(draw >= 0, draw + 1, draw)
    else:
        vals = rng.integers(lo, hi, size=n, endpoint=True)
    flat = vals.astype(np.int16)
    if zeros:
        flat[rng.permutation(n)[:zeros]] = 0
    return Tensor(flat.reshape(dims), roles)


def load_network(descriptor_path) -> NetworkDescriptor:
    """Load a JSON network descriptor and its referenced tensor files.

    CONV IFMs come back padded; invariants (shape consistency, int16 range)
    are enforced on the way in. A channel-count mismatch between chained CONV
    layers is a warning, not an error, since pooling may intervene.
    """
    p = Path(descriptor_path)
    if not p.exists():
        raise MissingFile(f"descriptor not found: {p}")
    desc = json.loads(p.read_text())
    base = p.parent
    layers: list[LayerRecord] = []
    for idx, lj in enumerate(desc.get("layers", [])):
        cfg = LayerConfig(
            kind=lj["kind"],
            C_i=lj["C_i"],
            C_o=lj["C_o"],
            H_i=lj.get("H_i", 1),
            W_i=lj.get("W_i", 1),
            H_k=lj.get("H_k", 1),
            W_k=lj.get("W_k", 1),
            stride=lj.get("stride", 1),
            pad=lj.get("pad", 0),
            name=lj.get("name", f"layer{idx}"),
        )
        ifm = weights = None
        if lj.get("ifm_file"):
            raw = read_raw_tensor(base / lj["ifm_file"], cfg.ifm_dims())
            if cfg.kind == CONV:
                raw = pad_hw(raw, cfg.pad)
            ifm = Tensor(raw, cfg.ifm_roles())
        if lj.get("weight_file"):
            raw = read_raw_tensor(base / lj["weight_file"], cfg.weight_dims())
            weights = Tensor(raw, cfg.weight_roles())
        layers.append(LayerRecord(cfg, ifm, weights, lj.get("ifm_file"), lj.get("weight_file")))

    for prev, cur in zip(layers, layers[1:]):
        if prev.config.kind == CONV and cur.config.kind == CONV:
            if cur.config.C_i != prev.config.C_o:
                warnings.warn(
                    f"layer {cur.config.name}: C_i={cur.config.C_i} does not chain "
                    f"from previous C_o={prev.config.C_o}",
                    stacklevel=2,
                )
    return NetworkDescriptor(desc.get("name", p.stem), layers)


def save_network(net: NetworkDescriptor, out_dir, descriptor_name="network.json") -> Path:
    """Write a network back to disk (descriptor JSON + raw tensor files).

    CONV IFM padding is cropped off so that save followed by load reproduces
    the original tensors bit-for-bit.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layer_entries = []
    for idx, rec in enumerate(net.layers):
        cfg = rec.config
        entry = {
            "name": cfg.name,
            "kind": cfg.kind,
            "C_i": cfg.C_i,
            "C_o": cfg.C_o,
            "H_i": cfg.H_i,
            "W_i": cfg.W_i,
            "H_k": cfg.H_k,
            "W_k": cfg.W_k,
            "stride": cfg.stride,
            "pad": cfg.pad,
        }
        if rec.ifm is not None:
            fname = rec.ifm_file or f"layer{idx}_ifm.bin"
            a = rec.ifm.data
            if cfg.kind == CONV:
                a = crop_hw(a, cfg.pad)
            write_raw_tensor(out / fname, a)
            entry["ifm_file"] = fname
        if rec.weights is not None:
            fname = rec.weight_file or f"layer{idx}_weights.bin"
            write_raw_tensor(out / fname, rec.weights.data)
            entry["weight_file"] = fname
        layer_entries.append(entry)
    desc_path = out / descriptor_name
    desc_path.write_text(json.dumps({"name": net.name, "layers": layer_entries}, indent=2))
    return desc_path
