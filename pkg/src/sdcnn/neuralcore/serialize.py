"""Parameter dumps as ``.npz`` archives with a JSON metadata record.

Arrays are stored as raw float64 so a save/load round trip is exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT = "sdcnn-weights/1"
_META_KEY = "__meta__"


def save_weights(path, weights: dict[str, np.ndarray], meta: dict | None = None) -> None:
    record = {"format": FORMAT, "shapes": {k: list(v.shape) for k, v in weights.items()}, "meta": meta or {}}
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
    arrays[_META_KEY] = np.frombuffer(json.dumps(record).encode("utf-8"), dtype=np.uint8)
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_weights(path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(Path(path), allow_pickle=False) as data:
        if _META_KEY not in data.files:
            raise ValueError(f"{path} is not a weight archive (no metadata record)")
        record = json.loads(data[_META_KEY].tobytes().decode("utf-8"))
        if record.get("format") != FORMAT:
            raise ValueError(f"unsupported weight format {record.get('format')!r}")
        weights = {k: data[k].copy() for k in data.files if k != _META_KEY}
    for k, shape in record["shapes"].items():
        if list(weights[k].shape) != shape:
            raise ValueError(f"{k}: stored shape {weights[k].shape} disagrees with header {shape}")
    return weights, record["meta"]
