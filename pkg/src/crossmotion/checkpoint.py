"""Unified checkpoint container for all trainable stages.

One file holds the run configuration, normalization statistics, and one
parameter block per stage (with optional optimizer moments and a step
counter). Serialization is canonical: sorted names, little-endian raw tensor
bytes, so save -> load -> save is byte-identical.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import RunConfig
from .features import FRAME_DIM, NormStats
from .optim import AdamState

MAGIC = b"MCKP"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8"}
_DTYPE_CODES = {"float32": 0, "float64": 1}


class CheckpointError(ValueError):
    pass


@dataclass
class Block:
    params: dict[str, np.ndarray]
    step: int = 0
    adam_m: dict[str, np.ndarray] | None = None
    adam_v: dict[str, np.ndarray] | None = None


@dataclass
class Checkpoint:
    config: RunConfig
    stats: NormStats | None = None
    blocks: dict[str, Block] = field(default_factory=dict)


def block_from_module(module: torch.nn.Module, state: AdamState | None = None) -> Block:
    params = {k: p.detach().cpu().numpy().copy() for k, p in module.named_parameters()}
    if state is None:
        return Block(params=params)
    return Block(
        params=params,
        step=state.step,
        adam_m={k: t.cpu().numpy().copy() for k, t in state.m.items()},
        adam_v={k: t.cpu().numpy().copy() for k, t in state.v.items()},
    )


def load_module_from_block(module: torch.nn.Module, block: Block) -> AdamState | None:
    with torch.no_grad():
        for name, p in module.named_parameters():
            if name not in block.params:
                raise CheckpointError(f"checkpoint block is missing parameter {name!r}")
            arr = block.params[name]
            if tuple(arr.shape) != tuple(p.shape):
                raise CheckpointError(f"shape mismatch for {name!r}")
            p.copy_(torch.from_numpy(arr.copy()).to(p.dtype))
    if block.adam_m is None:
        return None
    return AdamState(
        step=block.step,
        m={k: torch.from_numpy(v.copy()) for k, v in block.adam_m.items()},
        v={k: torch.from_numpy(v.copy()) for k, v in block.adam_v.items()},
    )


def _write_tensor_map(parts: list[bytes], tensors: dict[str, np.ndarray]) -> None:
    parts.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.name not in _DTYPE_CODES:
            arr = arr.astype(np.float64)
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<BB", _DTYPE_CODES[arr.dtype.name], arr.ndim))
        parts.append(struct.pack(f"<{max(arr.ndim, 0)}I", *arr.shape))
        parts.append(arr.astype(_DTYPES[_DTYPE_CODES[arr.dtype.name]]).tobytes())


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    parts: list[bytes] = [MAGIC, struct.pack("<I", VERSION)]
    cfg = ckpt.config.to_json().encode("utf-8")
    parts.append(struct.pack("<I", len(cfg)))
    parts.append(cfg)

    parts.append(struct.pack("<B", 1 if ckpt.stats is not None else 0))
    if ckpt.stats is not None:
        parts.append(np.ascontiguousarray(ckpt.stats.mean, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(ckpt.stats.std, dtype="<f8").tobytes())

    parts.append(struct.pack("<I", len(ckpt.blocks)))
    for name in sorted(ckpt.blocks):
        block = ckpt.blocks[name]
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<Q", block.step))
        _write_tensor_map(parts, block.params)
        parts.append(struct.pack("<B", 1 if block.adam_m is not None else 0))
        if block.adam_m is not None:
            _write_tensor_map(parts, block.adam_m)
            _write_tensor_map(parts, block.adam_v)

    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))


def _read_tensor_map(r: _Reader) -> dict[str, np.ndarray]:
    (count,) = r.unpack("I")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = r.unpack("H")
        name = r.take(nlen).decode("utf-8")
        code, ndim = r.unpack("BB")
        shape = r.unpack(f"{ndim}I") if ndim else ()
        dtype = _DTYPES.get(code)
        if dtype is None:
            raise CheckpointError(f"unknown tensor dtype code {code}")
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(n * int(dtype[-1])), dtype=dtype).reshape(shape)
        out[name] = arr.copy()
    return out


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != MAGIC:
        raise CheckpointError("bad checkpoint magic")
    (version,) = r.unpack("I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (clen,) = r.unpack("I")
    config = RunConfig.from_json(r.take(clen).decode("utf-8"))

    (has_stats,) = r.unpack("B")
    stats = None
    if has_stats:
        mean = np.frombuffer(r.take(8 * FRAME_DIM), dtype="<f8").copy()
        std = np.frombuffer(r.take(8 * FRAME_DIM), dtype="<f8").copy()
        stats = NormStats(mean=mean, std=std)

    (nblocks,) = r.unpack("I")
    blocks: dict[str, Block] = {}
    for _ in range(nblocks):
        (nlen,) = r.unpack("H")
        name = r.take(nlen).decode("utf-8")
        (step,) = r.unpack("Q")
        params = _read_tensor_map(r)
        (has_opt,) = r.unpack("B")
        adam_m = adam_v = None
        if has_opt:
            adam_m = _read_tensor_map(r)
            adam_v = _read_tensor_map(r)
        blocks[name] = Block(params=params, step=step, adam_m=adam_m, adam_v=adam_v)
    return Checkpoint(config=config, stats=stats, blocks=blocks)
