"""PMRP feature archives: one self-describing file of frame-aligned tensors.

Layout (little-endian)::

    b"PMRP" | u32 version (=1) | u64 manifest_length | manifest (UTF-8 JSON)
    | payload

The manifest is ``{"sample_rate", "hop", "ratio_f", "ratio_l", "tensors":
[{"name", "dtype": "f32", "shape": [rows, cols], "offset", "labels"?}]}``.
Offsets are absolute byte positions, 64-byte aligned, of row-major float32
data.  Every tensor shares the same row (frame) count.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MAGIC = b"PMRP"
VERSION = 1
ALIGN = 64
_PREFIX = struct.Struct("<4sIQ")


@dataclass
class Tensor:
    data: np.ndarray
    labels: list = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise FormatError(f"tensors must be 2-D, got shape {data.shape}")
        self.data = np.ascontiguousarray(data, dtype="<f4")
        if self.labels is not None:
            self.labels = [str(label) for label in self.labels]
            if len(self.labels) != self.data.shape[1]:
                raise FormatError(
                    f"{len(self.labels)} labels for a tensor with {self.data.shape[1]} columns")


@dataclass
class Archive:
    tensors: dict = field(default_factory=dict)
    sample_rate: int = 22050
    hop: int = 256
    ratio_f: float = 0.0
    ratio_l: float = 0.0

    @property
    def num_frames(self):
        rows = {t.data.shape[0] for t in self.tensors.values()}
        return rows.pop() if rows else 0


def _align(n):
    return (n + ALIGN - 1) // ALIGN * ALIGN


def _manifest(tensors, sample_rate, hop, ratio_f, ratio_l, payload_start):
    entries = []
    offset = payload_start
    for name, tensor in tensors.items():
        entry = {"name": name, "dtype": "f32", "shape": list(tensor.data.shape), "offset": offset}
        if tensor.labels is not None:
            entry["labels"] = tensor.labels
        entries.append(entry)
        offset = _align(offset + tensor.data.nbytes)
    doc = {"sample_rate": int(sample_rate), "hop": int(hop),
           "ratio_f": float(ratio_f), "ratio_l": float(ratio_l), "tensors": entries}
    return json.dumps(doc).encode("utf-8"), entries


def write_archive(path, tensors, sample_rate=22050, hop=256, ratio_f=0.0, ratio_l=0.0):
    """Write ``{name: Tensor or array}`` to ``path``."""
    tensors = {name: t if isinstance(t, Tensor) else Tensor(t) for name, t in tensors.items()}
    rows = {t.data.shape[0] for t in tensors.values()}
    if len(rows) > 1:
        raise FormatError(f"tensors disagree on frame count: {sorted(rows)}")

    # offsets depend on the manifest length, which depends on the offsets
    payload_start = _align(_PREFIX.size)
    while True:
        blob, entries = _manifest(tensors, sample_rate, hop, ratio_f, ratio_l, payload_start)
        needed = _align(_PREFIX.size + len(blob))
        if needed == payload_start:
            break
        payload_start = needed

    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        for entry, tensor in zip(entries, tensors.values()):
            fh.write(b"\0" * (entry["offset"] - fh.tell()))
            fh.write(tensor.data.tobytes())


def write(path, arc):
    write_archive(path, arc.tensors, arc.sample_rate, arc.hop, arc.ratio_f, arc.ratio_l)


def read_archive(path):
    """Read and validate an archive.

    Raises
    ------
    FormatError
        On a bad magic number, version, manifest, or tensor layout.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _PREFIX.size:
        raise FormatError(f"{path}: too short to be a PMRP archive")
    magic, version, length = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    end = _PREFIX.size + length
    if end > len(raw):
        raise FormatError(f"{path}: manifest runs past end of file")
    try:
        doc = json.loads(raw[_PREFIX.size:end].decode("utf-8"))
        entries = doc["tensors"]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: unreadable manifest: {exc}") from exc

    tensors = {}
    spans = []
    for entry in entries:
        try:
            name, dtype, shape, offset = entry["name"], entry["dtype"], entry["shape"], entry["offset"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: malformed tensor entry {entry!r}") from exc
        if dtype != "f32":
            raise FormatError(f"{path}: tensor {name!r} has unsupported dtype {dtype!r}")
        if len(shape) != 2 or min(shape) < 0:
            raise FormatError(f"{path}: tensor {name!r} has bad shape {shape}")
        nbytes = 4 * shape[0] * shape[1]
        if offset < end or offset % ALIGN or offset + nbytes > len(raw):
            raise FormatError(f"{path}: tensor {name!r} lies outside the payload")
        spans.append((offset, offset + nbytes, name))
        data = np.frombuffer(raw, dtype="<f4", count=shape[0] * shape[1], offset=offset)
        tensors[name] = Tensor(data.reshape(shape).copy(), entry.get("labels"))

    spans.sort()
    for (_, stop, a), (start, _, b) in zip(spans, spans[1:]):
        if start < stop:
            raise FormatError(f"{path}: tensors {a!r} and {b!r} overlap")
    rows = {t.data.shape[0] for t in tensors.values()}
    if len(rows) > 1:
        raise FormatError(f"{path}: tensors disagree on frame count: {sorted(rows)}")

    return Archive(tensors, int(doc.get("sample_rate", 22050)), int(doc.get("hop", 256)),
                   float(doc.get("ratio_f", 0.0)), float(doc.get("ratio_l", 0.0)))
