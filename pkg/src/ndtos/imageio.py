"""PGM and ND-RAW image files, tree text and Graphviz export.

ND-RAW is one ASCII header line ``NDRAW <ndims> <d1> ... <dn> u8|u16``
followed by little-endian row-major samples.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tree import NodeAttributes, ShapeTree, canonical_order

PGM = "pgm"
NDRAW = "ndraw"
FORMATS = {"pgm": PGM, "ndraw": NDRAW, "nd-raw": NDRAW}


class ImageFormatError(ValueError):
    """Malformed or truncated image file; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass
class RasterFile:
    data: np.ndarray
    format: str
    maxval: int | None = None
    binary: bool = True


def _format_name(fmt: str) -> str:
    try:
        return FORMATS[fmt.lower()]
    except KeyError:
        raise ValueError(f"unknown image format {fmt!r}") from None


def detect_format(buf: bytes) -> str:
    if buf[:2] in (b"P2", b"P5"):
        return PGM
    if buf[:5] == b"NDRAW":
        return NDRAW
    raise ImageFormatError("unrecognized image header", 0)


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_tokens(buf: bytes, pos: int, count: int) -> tuple:
    out = []
    for _ in range(count):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise ImageFormatError("unexpected end of PGM header", pos)
        out.append((m.group(1), m.start(1)))
        pos = m.end(1)
    return out, pos


def _int_token(tok: bytes, offset: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ImageFormatError(f"invalid {what} {tok!r}", offset) from None


def _parse_pgm(buf: bytes) -> RasterFile:
    magic = buf[:2]
    (w, h, mx), pos = _pgm_tokens(buf, 2, 3)
    width = _int_token(*w, "width")
    height = _int_token(*h, "height")
    maxval = _int_token(*mx, "maxval")
    if width < 1 or height < 1:
        raise ImageFormatError("image dimensions must be positive", w[1])
    if not 0 < maxval <= 65535:
        raise ImageFormatError(f"maxval {maxval} outside 1..65535", mx[1])
    dtype = np.uint8 if maxval < 256 else np.uint16
    count = width * height
    if magic == b"P2":
        values = []
        for _ in range(count):
            m = _TOKEN.match(buf, pos)
            if m is None:
                raise ImageFormatError(f"expected {count} samples, found {len(values)}", pos)
            v = _int_token(m.group(1), m.start(1), "sample")
            if not 0 <= v <= maxval:
                raise ImageFormatError(f"sample {v} exceeds maxval {maxval}", m.start(1))
            values.append(v)
            pos = m.end(1)
        data = np.array(values, dtype=dtype)
        binary = False
    else:
        pos += 1  # single whitespace after maxval
        width_bytes = 1 if maxval < 256 else 2
        expected = count * width_bytes
        payload = buf[pos:pos + expected]
        if len(payload) < expected:
            raise ImageFormatError(f"truncated payload: expected {expected} bytes, got {len(payload)}", pos)
        data = np.frombuffer(payload, dtype=">u2" if width_bytes == 2 else np.uint8).astype(dtype)
        if data.size and int(data.max()) > maxval:
            raise ImageFormatError(f"sample exceeds maxval {maxval}", pos)
        binary = True
    return RasterFile(data.reshape(height, width), PGM, maxval, binary)


def _parse_ndraw(buf: bytes) -> RasterFile:
    end = buf.find(b"\n")
    if end < 0:
        raise ImageFormatError("ND-RAW header has no newline", len(buf))
    fields = buf[:end].split()
    if len(fields) < 3 or fields[0] != b"NDRAW":
        raise ImageFormatError("malformed ND-RAW header", 0)
    ndims = _int_token(fields[1], 6, "ndims")
    if ndims < 1 or len(fields) != ndims + 3:
        raise ImageFormatError(f"ND-RAW header needs {ndims} extents and a sample type", 0)
    shape = tuple(_int_token(f, 0, "extent") for f in fields[2:2 + ndims])
    if any(s < 1 for s in shape):
        raise ImageFormatError("extents must be positive", 0)
    kind = fields[-1].decode("ascii", "replace")
    if kind not in ("u8", "u16"):
        raise ImageFormatError(f"unknown sample type {kind!r}", end - len(fields[-1]))
    dtype = np.dtype("<u2") if kind == "u16" else np.dtype(np.uint8)
    expected = int(np.prod(shape)) * dtype.itemsize
    payload = buf[end + 1:]
    if len(payload) < expected:
        raise ImageFormatError(f"truncated payload: expected {expected} bytes, got {len(payload)}", end + 1)
    if len(payload) > expected:
        raise ImageFormatError(f"trailing data: expected {expected} bytes, got {len(payload)}", end + 1 + expected)
    data = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("=")).reshape(shape)
    return RasterFile(data, NDRAW)


def read_raster(path, format: str | None = None) -> RasterFile:
    buf = Path(path).read_bytes()
    fmt = detect_format(buf) if format is None else _format_name(format)
    return _parse_pgm(buf) if fmt == PGM else _parse_ndraw(buf)


def read_image(path, format: str | None = None) -> np.ndarray:
    """Load a PGM (P2/P5) or ND-RAW image."""
    return read_raster(path, format).data


def encode(r: RasterFile) -> bytes:
    data = np.asarray(r.data)
    if data.size and (int(data.min()) < 0 or int(data.max()) > 65535):
        raise ValueError("samples must fit in 16 bits")
    if r.format == PGM:
        if data.ndim != 2:
            raise ValueError("PGM holds 2-D images only")
        maxval = r.maxval if r.maxval is not None else max(int(data.max()), 1) if data.size else 1
        if int(data.max()) > maxval:
            raise ValueError("samples exceed maxval")
        h, w = data.shape
        if not r.binary:
            rows = "\n".join(" ".join(str(int(v)) for v in row) for row in data)
            return f"P2\n{w} {h}\n{maxval}\n{rows}\n".encode("ascii")
        body = data.astype(">u2" if maxval > 255 else np.uint8).tobytes()
        return f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + body
    if r.format == NDRAW:
        wide = data.dtype.itemsize > 1 or (data.size and int(data.max()) > 255)
        header = "NDRAW {} {} {}\n".format(data.ndim, " ".join(map(str, data.shape)), "u16" if wide else "u8")
        return header.encode("ascii") + data.astype("<u2" if wide else np.uint8).tobytes()
    raise ValueError(f"unknown image format {r.format!r}")


def write_raster(path, r: RasterFile) -> None:
    Path(path).write_bytes(encode(r))


def write_image(path, u, format: str = "ndraw", maxval: int | None = None, binary: bool = True) -> None:
    write_raster(path, RasterFile(np.asarray(u), _format_name(format), maxval, binary))


def tree_text(t: ShapeTree, attrs: NodeAttributes | None = None) -> str:
    """``TOS n=<ndims> nodes=<k>`` then ``<id> <parent> <level> <area>`` per node."""
    attrs = canonical_order(t) if attrs is None else attrs
    lines = [f"TOS n={len(t.pixel_shape) or t.ndim} nodes={len(attrs)}"]
    for i in range(len(attrs)):
        lines.append(f"{i} {attrs.parent[i]} {attrs.level[i]} {attrs.area[i]}")
    return "\n".join(lines) + "\n"


def parse_tree_text(text: str) -> tuple:
    """Inverse of :func:`tree_text`: ``(ndims, rows)`` with rows ``(id, parent, level, area)``."""
    lines = text.strip().splitlines()
    m = re.fullmatch(r"TOS n=(\d+) nodes=(\d+)", lines[0].strip())
    if m is None:
        raise ValueError("bad tree header")
    rows = [tuple(int(x) for x in line.split()) for line in lines[1:]]
    if len(rows) != int(m.group(2)):
        raise ValueError("node count mismatch")
    return int(m.group(1)), rows


def tree_dot(t: ShapeTree, attrs: NodeAttributes | None = None) -> str:
    attrs = canonical_order(t) if attrs is None else attrs
    out = ["digraph tos {"]
    for i in range(len(attrs)):
        out.append(f'  n{i} [label="{i}:{attrs.level[i]}:{attrs.area[i]}"];')
    for i in range(1, len(attrs)):
        out.append(f"  n{attrs.parent[i]} -> n{i};")
    out.append("}")
    return "\n".join(out) + "\n"
