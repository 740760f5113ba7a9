"""PCD v0.7 reader/writer (ascii and binary, xyz payload).

Only the fields x, y, z are consumed; additional fields are tolerated and
skipped. Binary payloads are little-endian. Non-finite points are dropped on
load with a warning, so clouds never carry NaNs past ingestion.
"""
from __future__ import annotations

import warnings

import numpy as np

from .cloud import PointCloud
from .errors import (MalformedHeaderError, TruncatedPayloadError,
                     UnsupportedDataLayoutError)

_HEADER_KEYS = ("VERSION", "FIELDS", "SIZE", "TYPE", "COUNT", "WIDTH",
                "HEIGHT", "VIEWPOINT", "POINTS", "DATA")


def _parse_header(raw: bytes):
    header: dict[str, list[str]] = {}
    pos = 0
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise MalformedHeaderError("no DATA line found")
        line = raw[pos:nl]
        pos = nl + 1
        try:
            text = line.decode("ascii").strip()
        except UnicodeDecodeError as exc:
            raise MalformedHeaderError(f"undecodable header line: {exc}") from None
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        key = parts[0].upper()
        if key not in _HEADER_KEYS:
            raise MalformedHeaderError(f"unexpected header entry {parts[0]!r}")
        header[key] = parts[1:]
        if key == "DATA":
            return header, pos


def _header_int(header, key):
    try:
        return int(header[key][0])
    except (KeyError, IndexError, ValueError):
        raise MalformedHeaderError(f"missing or invalid {key} entry") from None


def load_pcd(path, frame_id: str = "robot") -> PointCloud:
    """Read a PCD v0.7 file.

    Raises MalformedHeaderError, UnsupportedDataLayoutError or
    TruncatedPayloadError depending on what is wrong with the file.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    header, payload_at = _parse_header(raw)

    if "FIELDS" not in header or not header["FIELDS"]:
        raise MalformedHeaderError("missing FIELDS entry")
    fields = [f.lower() for f in header["FIELDS"]]
    nf = len(fields)
    try:
        sizes = [int(v) for v in header.get("SIZE", [])]
        types = [t.upper() for t in header.get("TYPE", [])]
        counts = [int(v) for v in header.get("COUNT", ["1"] * nf)]
    except ValueError:
        raise MalformedHeaderError("non-integer SIZE/COUNT entry") from None
    if len(sizes) != nf or len(types) != nf or len(counts) != nf:
        raise MalformedHeaderError("FIELDS/SIZE/TYPE/COUNT lengths disagree")
    if min(counts, default=1) < 1 or min(sizes, default=1) < 1:
        raise MalformedHeaderError("SIZE and COUNT entries must be positive")

    if "POINTS" in header:
        points = _header_int(header, "POINTS")
        if "WIDTH" in header and "HEIGHT" in header:
            if points != _header_int(header, "WIDTH") * _header_int(header, "HEIGHT"):
                raise MalformedHeaderError("POINTS does not equal WIDTH * HEIGHT")
    elif "WIDTH" in header and "HEIGHT" in header:
        points = _header_int(header, "WIDTH") * _header_int(header, "HEIGHT")
    else:
        raise MalformedHeaderError("neither POINTS nor WIDTH/HEIGHT given")
    if points < 0:
        raise MalformedHeaderError("negative point count")

    for axis in ("x", "y", "z"):
        if axis not in fields:
            raise UnsupportedDataLayoutError(f"field {axis!r} not present")
        k = fields.index(axis)
        if types[k] != "F" or sizes[k] not in (4, 8):
            raise UnsupportedDataLayoutError(f"field {axis!r} must be a 4- or 8-byte float")
        if counts[k] != 1:
            raise UnsupportedDataLayoutError(f"field {axis!r} must have COUNT 1")

    data_mode = header["DATA"][0].lower() if header.get("DATA") else ""
    if data_mode not in ("ascii", "binary"):
        raise UnsupportedDataLayoutError(f"DATA {data_mode!r} is not supported")

    if data_mode == "ascii":
        xyz = _read_ascii(raw[payload_at:], fields, counts, points)
    else:
        xyz = _read_binary(raw[payload_at:], fields, sizes, types, counts, points)

    finite = np.isfinite(xyz).all(axis=1)
    dropped = int(xyz.shape[0] - finite.sum())
    if dropped:
        warnings.warn(f"dropped {dropped} non-finite point(s) from {path}")
        xyz = xyz[finite]
    return PointCloud(xyz, frame_id=frame_id)


def _read_ascii(payload: bytes, fields, counts, points) -> np.ndarray:
    row_width = sum(counts)
    tokens = payload.split()
    needed = points * row_width
    if len(tokens) < needed:
        raise TruncatedPayloadError(
            f"ascii payload has {len(tokens)} values, expected {needed}")
    try:
        values = np.array(tokens[:needed], dtype=np.float64)
    except ValueError:
        raise TruncatedPayloadError("ascii payload contains a non-numeric value") from None
    table = values.reshape(points, row_width)
    offsets = np.cumsum([0] + counts[:-1])
    cols = [int(offsets[fields.index(axis)]) for axis in ("x", "y", "z")]
    return table[:, cols]


def _read_binary(payload: bytes, fields, sizes, types, counts, points) -> np.ndarray:
    stride = int(np.dot(sizes, counts))
    needed = points * stride
    if len(payload) < needed:
        raise TruncatedPayloadError(
            f"binary payload has {len(payload)} bytes, expected {needed}")
    byte_offsets = np.cumsum([0] + [s * c for s, c in zip(sizes, counts)][:-1])
    names, formats, offs = [], [], []
    for axis in ("x", "y", "z"):
        k = fields.index(axis)
        names.append(axis)
        formats.append(f"<f{sizes[k]}")
        offs.append(int(byte_offsets[k]))
    dt = np.dtype({"names": names, "formats": formats, "offsets": offs,
                   "itemsize": stride})
    rec = np.frombuffer(payload[:needed], dtype=dt)
    out = np.empty((points, 3), dtype=np.float64)
    for j, axis in enumerate(("x", "y", "z")):
        out[:, j] = rec[axis]
    return out


def save_pcd(cloud: PointCloud, path, binary: bool = False) -> None:
    """Write a cloud as PCD v0.7 with float32 x y z fields."""
    xyz = cloud.xyz.astype(np.float32)
    n = xyz.shape[0]
    header = "\n".join([
        "# .PCD v0.7 - Point Cloud Data file format",
        "VERSION 0.7",
        "FIELDS x y z",
        "SIZE 4 4 4",
        "TYPE F F F",
        "COUNT 1 1 1",
        f"WIDTH {n}",
        "HEIGHT 1",
        "VIEWPOINT 0 0 0 1 0 0 0",
        f"POINTS {n}",
        f"DATA {'binary' if binary else 'ascii'}",
    ]) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(xyz.astype("<f4").tobytes())
        else:
            rows = "\n".join(
                f"{float(p[0]):.9g} {float(p[1]):.9g} {float(p[2]):.9g}" for p in xyz)
            if rows:
                rows += "\n"
            fh.write(rows.encode("ascii"))
