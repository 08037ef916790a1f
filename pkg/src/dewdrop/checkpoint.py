"""Binary checkpoint container for trained networks.

Layout: magic bytes ``DWDN``, format version as little-endian u32, a
length-prefixed (u32) UTF-8 JSON header describing the architecture and
the array manifest, then each array's values as little-endian float32 in
manifest order. Weights are stored at float32 precision regardless of
the in-memory dtype.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DWDN"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path, arch: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    header = dict(arch)
    header["arrays"] = [[name, list(arr.shape)] for name, arr in arrays]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such checkpoint: {path}")
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (blob_len,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12 : 12 + blob_len].decode("utf-8"))
    pos = 12 + blob_len
    arrays = {}
    for name, shape in header.pop("arrays"):
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        chunk = data[pos : pos + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"truncated weight data for array {name!r}")
        arrays[name] = np.frombuffer(chunk, dtype="<f4").reshape(shape).astype(np.float64)
        pos += nbytes
    if pos != len(data):
        raise CheckpointError("trailing bytes after weight data")
    return header, arrays


def _restore_arrays(net, arrays: dict[str, np.ndarray]) -> None:
    for name, target in net.arrays():
        if name not in arrays:
            raise CheckpointError(f"checkpoint is missing array {name!r}")
        loaded = arrays[name]
        if loaded.shape != target.shape:
            raise CheckpointError(f"array {name!r} has shape {loaded.shape}, expected {target.shape}")
        target[...] = loaded


def save_detector(path, net) -> None:
    save_checkpoint(path, net.arch_dict(), net.arrays())


def load_detector(path):
    from .detector import DetectorArch, build_detector

    header, arrays = load_checkpoint(path)
    if header.get("kind") != "detector":
        raise CheckpointError(f"expected a detector checkpoint, got kind={header.get('kind')!r}")
    arch = DetectorArch(
        stem=tuple(header["stem"]),
        trunk=header["trunk"],
        bottleneck=header["bottleneck"],
        blocks=header["blocks"],
        tail=header["tail"],
        up=tuple(header["up"]),
    )
    net = build_detector(seed=0, arch=arch)
    _restore_arrays(net, arrays)
    return net


def save_denoiser(path, den) -> None:
    save_checkpoint(path, den.arch_dict(), den.arrays())


def load_denoiser(path):
    from .diffusion import MLPDenoiser

    header, arrays = load_checkpoint(path)
    if header.get("kind") != "mlp_denoiser":
        raise CheckpointError(f"expected a denoiser checkpoint, got kind={header.get('kind')!r}")
    den = MLPDenoiser(
        data_shape=tuple(header["data_shape"]),
        hidden=tuple(header["hidden"]),
        t_scale=header["t_scale"],
    )
    _restore_arrays(den, arrays)
    return den


def checkpoint_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
