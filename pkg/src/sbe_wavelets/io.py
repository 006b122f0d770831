"""File formats: LWT1 raw tensors, binary PGM, checkpoints, metrics CSV.

LWT1 layout: 16-byte header ``b"LWT1"`` + ``rows, cols, channels`` as
little-endian uint32, followed by ``channels * rows * cols`` little-endian
float32 values, channel-major then row-major.
"""

from __future__ import annotations

import csv
import json
import re
import struct
from pathlib import Path

import numpy as np
import torch

from .lattice import as_json_floats

MAGIC = b"LWT1"
_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    pass


def write_lwt1(path, array) -> None:
    a = np.asarray(array, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise FormatError(f"LWT1 stores 2-D or 3-D arrays, got shape {a.shape}")
    c, r, k = a.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, r, k, c))
        fh.write(a.astype("<f4").tobytes(order="C"))


def read_lwt1(path) -> np.ndarray:
    """Return a ``(channels, rows, cols)`` float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated LWT1 header")
    magic, r, k, c = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    n = r * k * c
    body = raw[_HEADER.size :]
    if len(body) != 4 * n:
        raise FormatError(f"{path}: expected {4 * n} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(c, r, k).astype(np.float32)


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary (P5) PGM into a uint8 array."""
    raw = Path(path).read_bytes()
    # Header tokens may be separated by whitespace and '#' comments.
    tokens, pos = [], 0
    pattern = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    for _ in range(4):
        m = pattern.match(raw, pos)
        if not m:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: only binary P5 PGM is supported, got {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header") from None
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: maxval {maxval} is not 8-bit")
    data = raw[pos + 1 : pos + 1 + width * height]
    if len(data) != width * height:
        raise FormatError(f"{path}: expected {width * height} pixels, found {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, image) -> None:
    img = np.asarray(image)
    if img.ndim != 2:
        raise FormatError(f"PGM needs a 2-D image, got shape {img.shape}")
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def rescale_to_u8(a) -> np.ndarray:
    """Affine map from ``[min, max]`` onto ``[0, 255]``; constant input maps to 0."""
    a = np.asarray(a, dtype=np.float64)
    lo, hi = float(a.min()), float(a.max())
    if hi - lo <= 0:
        return np.zeros(a.shape, dtype=np.uint8)
    return np.rint(255 * (a - lo) / (hi - lo)).astype(np.uint8)


def read_image(path) -> np.ndarray:
    """PGM or LWT1 file as a ``(channels, rows, cols)`` float64 array."""
    head = Path(path).read_bytes()[:4]
    if head == MAGIC:
        return read_lwt1(path).astype(np.float64)
    if head[:2] == b"P5":
        return read_pgm(path).astype(np.float64)[None]
    raise FormatError(f"{path}: not a P5 PGM or LWT1 file")


# -- checkpoints ---------------------------------------------------------


def _as_lwt_shape(shape) -> tuple[int, int, int]:
    # (channels, rows, cols) view of an arbitrary parameter shape.
    shape = tuple(shape)
    if len(shape) == 0:
        return 1, 1, 1
    if len(shape) == 1:
        return 1, 1, shape[0]
    if len(shape) == 2:
        return 1, shape[0], shape[1]
    return int(np.prod(shape[:-2])), shape[-2], shape[-1]


def save_checkpoint(directory, model) -> Path:
    """Write ``manifest.json`` plus one LWT1 blob per parameter.

    Batch-norm running statistics are saved the same way under ``buffers``.
    Lattice angles are also stored in the manifest at full precision, since
    the blobs are float32.
    """
    from .nn import WaveletUnit

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    def blobs(named):
        entries = []
        for name, t in named:
            if not t.is_floating_point():
                continue
            arr = t.detach().cpu().numpy()
            fname = f"{name}.lwt"
            write_lwt1(out / fname, arr.reshape(_as_lwt_shape(arr.shape)))
            entry = dict(name=name, shape=list(arr.shape), dtype=str(arr.dtype), file=fname)
            if name.endswith("angles"):
                entry["values"] = as_json_floats(arr.reshape(-1))
            entries.append(entry)
        return entries

    params = blobs(model.net.named_parameters())
    buffers = blobs(model.net.named_buffers())
    units = [
        dict(name=n, mode=m.mode, taps=m.taps)
        for n, m in model.net.named_modules()
        if isinstance(m, WaveletUnit)
    ]
    manifest = dict(
        architecture=dict(
            name="ToyNet",
            wavelet=model.config.wavelet,
            baseline=model.config.baseline,
            units=units,
        ),
        config=model.config.to_dict(),
        metrics=model.history,
        parameters=params,
        buffers=buffers,
    )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return out


def load_checkpoint(directory):
    from .train import TrainConfig, TrainedModel, build_net

    root = Path(directory)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{root}: unreadable checkpoint manifest ({exc})") from None
    cfg = TrainConfig(**manifest["config"])
    net = build_net(cfg)
    state = net.state_dict()
    for entry in manifest["parameters"] + manifest.get("buffers", []):
        name = entry["name"]
        if name not in state:
            raise FormatError(f"{root}: checkpoint parameter {name!r} not in ToyNet")
        shape = tuple(entry["shape"])
        if "values" in entry:
            arr = np.asarray(entry["values"], dtype=np.float64).reshape(shape)
        else:
            arr = read_lwt1(root / entry["file"]).reshape(shape)
        if tuple(state[name].shape) != shape:
            raise FormatError(f"{root}: shape mismatch for {name}: {shape} vs {tuple(state[name].shape)}")
        state[name] = torch.from_numpy(np.array(arr)).to(state[name].dtype)
    net.load_state_dict(state)
    return TrainedModel(net, cfg, history=list(manifest.get("metrics", [])))


def write_metrics_csv(path, history) -> None:
    from .train import METRIC_FIELDS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for row in history:
            w.writerow([row["epoch"]] + [repr(float(row[k])) for k in METRIC_FIELDS[1:]])


def write_response_csv(path, table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("w", "mag_sq_h0", "mag_sq_h1"))
        for row in np.asarray(table):
            w.writerow([f"{v:.17g}" for v in row])
