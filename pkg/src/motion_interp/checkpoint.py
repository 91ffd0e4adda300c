"""Versioned binary checkpoints.

Layout: a UTF-8 text header, then raw little-endian float64 payloads::

    MICVAE1
    d=51
    hidden_size=128
    latent_size=32
    gap_length=75
    condition_length=25
    tensors=<n>
    <name> <dim0>x<dim1>...      (one line per tensor, payload order)
    end
    <payload bytes>

Normalizer statistics, when present, travel as ``normalizer.mean`` and
``normalizer.std`` tensors.
"""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import torch

from .data import Normalizer
from .model import DTYPE, ModelConfig, MotionCVAE

MAGIC = b"MICVAE"
VERSION = 1
_NORM_KEYS = ("normalizer.mean", "normalizer.std")


class CheckpointError(ValueError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class ShapeMismatchError(CheckpointError):
    pass


class Checkpoint(NamedTuple):
    model: MotionCVAE
    config: ModelConfig
    normalizer: Optional[Normalizer]


def _shape_str(shape) -> str:
    return "x".join(str(s) for s in shape) if len(shape) else "scalar"


def checkpoint_bytes(model: MotionCVAE, normalizer: Optional[Normalizer] = None) -> bytes:
    cfg = model.config
    tensors = [(k, v.detach().cpu().numpy()) for k, v in model.state_dict().items()]
    if normalizer is not None:
        if normalizer.d != cfg.d:
            raise ValueError(f"normalizer has d={normalizer.d}, model has d={cfg.d}")
        tensors += [(_NORM_KEYS[0], normalizer.mean), (_NORM_KEYS[1], normalizer.std)]
    header = [f"{MAGIC.decode()}{VERSION}"]
    header += [f"{f.name}={getattr(cfg, f.name)}" for f in fields(cfg)]
    header.append(f"tensors={len(tensors)}")
    header += [f"{name} {_shape_str(arr.shape)}" for name, arr in tensors]
    header.append("end")
    out = bytearray("\n".join(header).encode() + b"\n")
    for _, arr in tensors:
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return bytes(out)


def save_checkpoint(model: MotionCVAE, path, normalizer: Optional[Normalizer] = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(model, normalizer))


def _readline(buf: bytes, pos: int):
    nl = buf.find(b"\n", pos)
    if nl < 0:
        raise CorruptCheckpointError("truncated header")
    try:
        return buf[pos:nl].decode(), nl + 1
    except UnicodeDecodeError:
        raise CorruptCheckpointError("header is not valid text") from None


def parse_checkpoint(buf: bytes) -> Checkpoint:
    if not buf.startswith(MAGIC):
        raise CorruptCheckpointError("missing MICVAE magic; not a checkpoint file")
    line, pos = _readline(buf, 0)
    version = line[len(MAGIC):]
    if version != str(VERSION):
        raise CheckpointVersionError(f"unsupported checkpoint version {version!r} (this build reads {VERSION})")
    values = {}
    for f in fields(ModelConfig):
        line, pos = _readline(buf, pos)
        key, _, val = line.partition("=")
        if key != f.name:
            raise CorruptCheckpointError(f"expected header field {f.name!r}, found {line!r}")
        try:
            values[key] = int(val)
        except ValueError:
            raise CorruptCheckpointError(f"bad value for {key}: {val!r}") from None
    try:
        config = ModelConfig(**values)
    except ValueError as exc:
        raise CorruptCheckpointError(str(exc)) from None
    line, pos = _readline(buf, pos)
    if not line.startswith("tensors="):
        raise CorruptCheckpointError(f"expected tensor count, found {line!r}")
    try:
        n = int(line[len("tensors="):])
    except ValueError:
        raise CorruptCheckpointError(f"bad tensor count {line!r}") from None
    entries = []
    for _ in range(n):
        line, pos = _readline(buf, pos)
        try:
            name, shape_s = line.split(" ")
            shape = () if shape_s == "scalar" else tuple(int(s) for s in shape_s.split("x"))
        except ValueError:
            raise CorruptCheckpointError(f"bad tensor entry {line!r}") from None
        entries.append((name, shape))
    line, pos = _readline(buf, pos)
    if line != "end":
        raise CorruptCheckpointError("header terminator missing")
    expected = sum(8 * int(np.prod(s)) for _, s in entries)
    if len(buf) - pos != expected:
        raise CorruptCheckpointError(f"payload is {len(buf) - pos} bytes, header describes {expected}")

    model = MotionCVAE(config)
    ref = model.state_dict()
    arrays = {}
    for name, shape in entries:
        size = int(np.prod(shape))
        arrays[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape)
        pos += 8 * size
    norm_shape = (config.d,)
    for name, arr in arrays.items():
        want = ref[name].shape if name in ref else norm_shape if name in _NORM_KEYS else None
        if want is None:
            raise CorruptCheckpointError(f"unknown tensor {name!r}")
        if tuple(arr.shape) != tuple(want):
            raise ShapeMismatchError(
                f"tensor {name!r} has shape {tuple(arr.shape)}, config implies {tuple(want)}"
            )
    missing = [k for k in ref if k not in arrays]
    if missing:
        raise ShapeMismatchError(f"checkpoint lacks parameter group {missing[0]!r}")
    model.load_state_dict({k: torch.tensor(arrays[k], dtype=DTYPE) for k in ref})
    normalizer = None
    if all(k in arrays for k in _NORM_KEYS):
        normalizer = Normalizer(arrays[_NORM_KEYS[0]].copy(), arrays[_NORM_KEYS[1]].copy())
    return Checkpoint(model, config, normalizer)


def load_checkpoint(path) -> Checkpoint:
    return parse_checkpoint(Path(path).read_bytes())
