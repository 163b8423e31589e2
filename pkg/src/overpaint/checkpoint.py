"""Self-describing checkpoint container.

Layout: an 8-byte magic ("OVPCKPT" + version), a u32 header length, a JSON
header (config, step, loss histories, tensor index with dtype/shape/offset),
then the raw little-endian tensor bytes.  Round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .model import ModelConfig, VariationTransformer, build_model

MAGIC = b"OVPCKPT1"

_DTYPES = {"float32": np.float32, "int64": np.int64}


@dataclass
class Checkpoint:
    config: ModelConfig
    state: dict[str, torch.Tensor]
    step: int
    train_history: list[float] = field(default_factory=list)
    val_history: list[tuple[int, float]] = field(default_factory=list)

    def build_model(self) -> VariationTransformer:
        model = build_model(self.config)
        model.load_state_dict(self.state)
        return model


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    tensors = []
    blobs = []
    offset = 0
    for name in sorted(ckpt.state):
        array = ckpt.state[name].detach().cpu().numpy()
        if str(array.dtype) not in _DTYPES:
            array = array.astype(np.float32)
        blob = np.ascontiguousarray(array).tobytes()
        tensors.append(
            {
                "name": name,
                "dtype": str(array.dtype),
                "shape": list(array.shape),
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps(
        {
            "config": ckpt.config.to_dict(),
            "step": ckpt.step,
            "train_history": ckpt.train_history,
            "val_history": ckpt.val_history,
            "tensors": tensors,
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(4, "big"))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    header_len = int.from_bytes(data[8:12], "big")
    header = json.loads(data[12 : 12 + header_len])
    base = 12 + header_len
    state = {}
    for entry in header["tensors"]:
        dtype = _DTYPES[entry["dtype"]]
        start = base + entry["offset"]
        blob = data[start : start + entry["nbytes"]]
        array = np.frombuffer(blob, dtype=dtype).reshape(entry["shape"]).copy()
        state[entry["name"]] = torch.from_numpy(array)
    return Checkpoint(
        config=ModelConfig.from_dict(header["config"]),
        state=state,
        step=header["step"],
        train_history=header["train_history"],
        val_history=[tuple(v) for v in header["val_history"]],
    )
