"""File formats: PFM depth, binary PPM images, JSON, CSV and checkpoints.

All writers go through :func:`atomic_write` (temporary file + rename) so an
interrupted run never leaves a half-written result behind.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile

import numpy as np

from .errors import ParseError

CKPT_MAGIC = b"SPDK"
CKPT_VERSION = 1


def atomic_write(path, payload):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_header_tokens(raw, count, path):
    """Whitespace-separated tokens of a Netpbm-style header, plus the data offset."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(path, pos, "truncated header")
        tokens.append((raw[start:pos], start))
    if pos >= len(raw):
        raise ParseError(path, pos, "header not terminated")
    return tokens, pos + 1  # exactly one whitespace byte ends the header


# --- PFM -------------------------------------------------------------------


def write_pfm(path, depth):
    """Single-channel little-endian PFM (scale -1.0), rows stored bottom-up."""
    d = np.asarray(depth, dtype=np.float32).squeeze()
    if d.ndim != 2:
        raise ValueError(f"write_pfm expects a 2-D raster, got shape {np.shape(depth)}")
    h, w = d.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    atomic_write(path, header + np.flipud(d).astype("<f4").tobytes())


def read_pfm(path):
    raw = open(path, "rb").read()
    tokens, offset = _read_header_tokens(raw, 4, path)
    magic, w_tok, h_tok, s_tok = tokens
    if magic[0] != b"Pf":
        raise ParseError(path, magic[1], f"expected 'Pf', got {magic[0]!r}")
    try:
        w, h = int(w_tok[0]), int(h_tok[0])
        scale = float(s_tok[0])
    except ValueError:
        raise ParseError(path, w_tok[1], "malformed size or scale") from None
    if w <= 0 or h <= 0:
        raise ParseError(path, w_tok[1], f"invalid size {w}x{h}")
    dtype = "<f4" if scale < 0 else ">f4"
    need = 4 * w * h
    if len(raw) - offset < need:
        raise ParseError(path, len(raw), f"truncated data: need {need} bytes after offset {offset}")
    data = np.frombuffer(raw, dtype=dtype, count=w * h, offset=offset).reshape(h, w)
    return np.flipud(data).astype(np.float64)


# --- PPM -------------------------------------------------------------------


def to_uint8(rgb):
    return np.clip(np.rint(np.asarray(rgb, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path, rgb):
    """Binary P6, maxval 255. ``rgb`` is (3, H, W) float in [0, 1] or uint8."""
    a = np.asarray(rgb)
    if a.ndim != 3 or a.shape[0] != 3:
        raise ValueError(f"write_ppm expects (3, H, W), got {a.shape}")
    u8 = a if a.dtype == np.uint8 else to_uint8(a)
    _, h, w = u8.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    atomic_write(path, header + np.ascontiguousarray(np.moveaxis(u8, 0, -1)).tobytes())


def read_ppm(path, raw_uint8=False):
    """(3, H, W) float in [0, 1] (or uint8 with ``raw_uint8``). Also accepts P5 (PGM)."""
    raw = open(path, "rb").read()
    tokens, offset = _read_header_tokens(raw, 4, path)
    magic = tokens[0][0]
    if magic not in (b"P6", b"P5"):
        raise ParseError(path, tokens[0][1], f"expected P6 or P5, got {magic!r}")
    try:
        w, h, maxval = (int(t[0]) for t in tokens[1:])
    except ValueError:
        raise ParseError(path, tokens[1][1], "malformed size or maxval") from None
    if maxval != 255:
        raise ParseError(path, tokens[3][1], f"only maxval 255 is supported, got {maxval}")
    ch = 3 if magic == b"P6" else 1
    need = w * h * ch
    if len(raw) - offset < need:
        raise ParseError(path, len(raw), f"truncated data: need {need} bytes after offset {offset}")
    img = np.frombuffer(raw, dtype=np.uint8, count=need, offset=offset).reshape(h, w, ch)
    img = np.moveaxis(img, -1, 0)
    if ch == 1:
        img = np.repeat(img, 3, axis=0)
    return img.copy() if raw_uint8 else img.astype(np.float64) / 255.0


def read_gray(path):
    """Grayscale float image from a PGM/PPM file."""
    raw = open(path, "rb").read(2)
    img = read_ppm(path)
    if raw == b"P5":
        return img[0]
    return np.einsum("chw,c->hw", img, np.array([0.299, 0.587, 0.114]))


# --- JSON / CSV ------------------------------------------------------------


def write_json(path, obj):
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def read_json(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.pos, exc.msg) from None


def csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf)  # RFC 4180: minimal quoting, CRLF line ends
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows).encode("utf-8"))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# --- checkpoints -----------------------------------------------------------


def write_checkpoint(path, config, records):
    """``SPDK`` | u32 version | u32 len + JSON config | u32 count | records.

    Each record: u32 name length, UTF-8 name, u32 ndim, u32 extents, then
    little-endian float64 data. Records are written in the given order.
    """
    cfg = json.dumps(config, sort_keys=True).encode("utf-8")
    parts = [CKPT_MAGIC, struct.pack("<I", CKPT_VERSION), struct.pack("<I", len(cfg)), cfg, struct.pack("<I", len(records))]
    for name, arr in records.items():
        a = np.asarray(arr, dtype="<f8")
        nb = name.encode("utf-8")
        parts.append(struct.pack("<I", len(nb)) + nb)
        parts.append(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(np.ascontiguousarray(a).tobytes())
    atomic_write(path, b"".join(parts))


def read_checkpoint(path):
    raw = open(path, "rb").read()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(raw):
            raise ParseError(path, pos, f"truncated while reading {what}")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    if take(4, "magic") != CKPT_MAGIC:
        raise ParseError(path, 0, "bad magic, not a checkpoint")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CKPT_VERSION:
        raise ParseError(path, 4, f"unsupported checkpoint version {version}")
    (clen,) = struct.unpack("<I", take(4, "config length"))
    config = json.loads(take(clen, "config").decode("utf-8"))
    (count,) = struct.unpack("<I", take(4, "record count"))
    records = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<I", take(4, "name length"))
        name = take(nlen, "name").decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4, "ndim"))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, "shape"))
        n = int(np.prod(shape)) if ndim else 1
        records[name] = np.frombuffer(take(8 * n, f"data of {name}"), dtype="<f8").reshape(shape).astype(np.float64)
    if pos != len(raw):
        raise ParseError(path, pos, "trailing bytes after last record")
    return config, records
