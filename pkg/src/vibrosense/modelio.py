"""Versioned text serialization with lossless (hex) float encoding.

Used for fitted forecasters, classifiers, and report payloads.
"""

from __future__ import annotations

import json
from typing import Any, Tuple

import numpy as np

from .core import ContractError

FORMAT_NAME = "vibrosense-model"
FORMAT_VERSION = 1


def to_jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return {"~f": float(obj).hex()}
    if isinstance(obj, np.ndarray):
        if obj.dtype.kind in "iub":
            return {"~ai": obj.tolist(), "shape": list(obj.shape)}
        return {"~a": [v.hex() for v in obj.ravel().tolist()], "shape": list(obj.shape)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    raise ContractError(f"cannot serialize value of type {type(obj).__name__}")


def from_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        if "~f" in obj:
            return float.fromhex(obj["~f"])
        if "~a" in obj:
            flat = np.array([float.fromhex(t) for t in obj["~a"]], dtype=np.float64)
            return flat.reshape(obj["shape"])
        if "~ai" in obj:
            return np.array(obj["~ai"], dtype=np.int64).reshape(obj["shape"])
        return {k: from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [from_jsonable(v) for v in obj]
    return obj


def save_model(kind: str, payload: dict, path) -> None:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "payload": to_jsonable(payload),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path, expected_kind: str = None) -> Tuple[str, dict]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContractError(f"corrupt model file {path}: {exc}") from exc
    for field in ("format", "version", "kind", "payload"):
        if field not in doc:
            raise ContractError(f"model file missing field '{field}'")
    if doc["format"] != FORMAT_NAME:
        raise ContractError(f"unexpected format '{doc['format']}'")
    if doc["version"] != FORMAT_VERSION:
        raise ContractError(f"unsupported model version {doc['version']}")
    if expected_kind is not None and doc["kind"] != expected_kind:
        raise ContractError(f"expected kind '{expected_kind}', found '{doc['kind']}'")
    return doc["kind"], from_jsonable(doc["payload"])
