"""Versioned binary checkpoints.

Layout: 8-byte magic, little-endian u32 format version, u64 header length,
UTF-8 JSON header (run config snapshot, parameter block names and shapes,
optimizer step count, RNG state), then raw little-endian float64 payload
(parameter blocks, Adam first moments, Adam second moments, in header
order), and a trailing SHA-256 checksum over everything before it.

A save/load round trip reproduces parameters bit for bit, and loading
restores the RNG stream and optimizer moments so a resumed run continues
the exact trajectory.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict

import numpy as np

from .optim import AdamState
from .runconfig import RunConfig
from .vmc import TrainState
from .wavefunction import Wavefunction, init_model

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint", "restore_model"]

MAGIC = b"RVMCCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, run_config: RunConfig, model: Wavefunction, state: TrainState) -> None:
    header = {
        "config": asdict(run_config),
        "blocks": [
            {"name": name, "shape": list(p.value.shape)}
            for name, p in model.params.items()
        ],
        "adam_t": state.adam.t,
        "rng_state": json.loads(json.dumps(state.rng.bit_generator.state, default=int)),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(header_bytes)), header_bytes]
    for name, p in model.params.items():
        parts.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    for name in model.params:
        parts.append(np.ascontiguousarray(state.adam.m[name], dtype="<f8").tobytes())
    for name in model.params:
        parts.append(np.ascontiguousarray(state.adam.v[name], dtype="<f8").tobytes())
    blob = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(blob + hashlib.sha256(blob).digest())


def load_checkpoint(path):
    """Read and verify a checkpoint file.

    Returns ``(run_config, blocks, adam_t, adam_m, adam_v, rng_state)`` with
    blocks and moments as name -> array dicts.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 12 + 32 or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch (truncated or corrupt)")
    version, header_len = struct.unpack_from("<IQ", body, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    header_start = len(MAGIC) + 12
    header = json.loads(body[header_start : header_start + header_len].decode("utf-8"))
    run_config = RunConfig(**header["config"])

    offset = header_start + header_len
    payload = np.frombuffer(body, dtype="<f8", offset=offset)
    sizes = [int(np.prod(b["shape"])) if b["shape"] else 1 for b in header["blocks"]]
    expected = 3 * sum(sizes)
    if payload.size != expected:
        raise CheckpointError(
            f"{path}: payload holds {payload.size} doubles, header promises {expected}"
        )

    def take(cursor):
        out = {}
        for block, size in zip(header["blocks"], sizes):
            out[block["name"]] = (
                payload[cursor : cursor + size].reshape(block["shape"]).astype(np.float64)
            )
            cursor += size
        return out, cursor

    blocks, cursor = take(0)
    adam_m, cursor = take(cursor)
    adam_v, cursor = take(cursor)
    return run_config, blocks, header["adam_t"], adam_m, adam_v, header["rng_state"]


def restore_model(path):
    """Rebuild (run_config, model, state) from a checkpoint file."""
    run_config, blocks, adam_t, adam_m, adam_v, rng_state = load_checkpoint(path)
    model = init_model(run_config.model_config())
    apply_blocks(model, blocks)
    adam = AdamState(model.params)
    adam.t = adam_t
    for name in model.params:
        adam.m[name][...] = adam_m[name]
        adam.v[name][...] = adam_v[name]
    rng = np.random.default_rng()
    rng.bit_generator.state = rng_state
    return run_config, model, TrainState(adam=adam, rng=rng)


def apply_blocks(model: Wavefunction, blocks: dict[str, np.ndarray]) -> None:
    """Copy named blocks into a model, rejecting name or shape mismatches."""
    if set(blocks) != set(model.params):
        missing = set(model.params) - set(blocks)
        extra = set(blocks) - set(model.params)
        raise CheckpointError(
            f"parameter blocks do not match the model (missing {sorted(missing)}, "
            f"unexpected {sorted(extra)})"
        )
    for name, p in model.params.items():
        if tuple(blocks[name].shape) != p.value.shape:
            raise CheckpointError(
                f"block '{name}' has shape {blocks[name].shape}, "
                f"model expects {p.value.shape}"
            )
    for name, p in model.params.items():
        p.value[...] = blocks[name]
