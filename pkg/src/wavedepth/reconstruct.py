"""Pinhole back-projection of depth maps to camera-frame point clouds, PLY export."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import io
from .errors import ContractError, ParseError


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ContractError(f"focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx <= self.width - 1 and 0 <= self.cy <= self.height - 1):
            raise ContractError(f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image")

    @classmethod
    def from_dict(cls, d):
        missing = {"fx", "fy", "cx", "cy", "width", "height"} - set(d)
        if missing:
            raise ContractError(f"intrinsics missing field(s): {', '.join(sorted(missing))}")
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]), int(d["width"]), int(d["height"]))

    def project(self, points):
        """Camera-frame points (N, 3) to pixel coordinates (N, 2) as (u, v)."""
        p = np.asarray(points, dtype=np.float64)
        return np.stack([self.fx * p[:, 0] / p[:, 2] + self.cx, self.fy * p[:, 1] / p[:, 2] + self.cy], axis=1)


@dataclass
class PointCloud:
    points: np.ndarray
    colors: np.ndarray | None = None
    pixels: np.ndarray | None = None

    def __len__(self):
        return len(self.points)


def backproject(depth, mask, k, pose=None, rgb=None):
    """Lift every valid pixel (u = column, v = row) to ``z * K^-1 [u, v, 1]``.

    ``pose`` is an optional 4x4 rigid transform applied afterwards; ``rgb``
    (3, H, W) or (H, W, 3) in [0, 1] supplies per-point colours.
    """
    d = np.asarray(getattr(depth, "data", depth), dtype=np.float64).squeeze()
    m = np.asarray(getattr(mask, "mask", mask), dtype=bool).squeeze()
    if d.shape != (k.height, k.width) or m.shape != d.shape:
        raise ContractError(f"depth {d.shape} / mask {m.shape} do not match intrinsics {k.height}x{k.width}")
    v, u = np.nonzero(m)
    z = d[v, u]
    if np.any(z <= 0):
        raise ContractError("back-projection needs positive depth on valid pixels")
    pts = np.stack([(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z], axis=1)
    if pose is not None:
        pose = np.asarray(pose, dtype=np.float64)
        if pose.shape != (4, 4):
            raise ContractError(f"pose must be 4x4, got {pose.shape}")
        pts = pts @ pose[:3, :3].T + pose[:3, 3]
    colors = None
    if rgb is not None:
        c = np.asarray(rgb, dtype=np.float64)
        if c.shape[0] == 3 and c.ndim == 3:
            c = np.moveaxis(c, 0, -1)
        if c.shape[:2] != d.shape:
            raise ContractError(f"rgb {c.shape} does not match depth {d.shape}")
        colors = np.clip(np.rint(c[v, u] * 255.0), 0, 255).astype(np.uint8)
    return PointCloud(pts, colors, np.stack([u, v], axis=1))


def export_ply(pc, path):
    """Write an ASCII PLY; coordinates with 9 significant digits."""
    if len(pc) == 0:
        raise ContractError("export_ply: empty point cloud")
    lines = ["ply", "format ascii 1.0", f"element vertex {len(pc)}", "property float x", "property float y", "property float z"]
    if pc.colors is not None:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines.append("end_header")
    body = []
    for i, (x, y, z) in enumerate(pc.points):
        row = f"{x:.9g} {y:.9g} {z:.9g}"
        if pc.colors is not None:
            r, g, b = pc.colors[i]
            row += f" {int(r)} {int(g)} {int(b)}"
        body.append(row)
    text = "\n".join(lines + body) + "\n"

    try:
        io.atomic_write(path, text.encode("ascii"))
    except OSError as exc:
        raise OSError(f"export_ply: cannot write {os.fspath(path)}: {exc}") from exc


def read_ply(path):
    """Parse an ASCII PLY written by :func:`export_ply`."""
    raw = open(path, "rb").read()
    text = raw.decode("ascii")
    head, sep, body = text.partition("end_header\n")
    if not sep:
        raise ParseError(path, len(raw), "missing end_header")
    n = None
    props = []
    for line in head.splitlines():
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        elif parts and parts[0] == "property":
            props.append(parts[-1])
    if n is None:
        raise ParseError(path, 0, "no vertex element")
    rows = [r.split() for r in body.splitlines() if r.strip()]
    if len(rows) != n:
        raise ParseError(path, len(head) + len(sep), f"expected {n} vertices, found {len(rows)}")
    data = np.array(rows, dtype=np.float64).reshape(n, len(props))
    colors = data[:, 3:6].astype(np.uint8) if len(props) == 6 else None
    return PointCloud(data[:, :3], colors)
