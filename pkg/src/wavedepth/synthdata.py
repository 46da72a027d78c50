"""Synthetic colonoscopy-like scenes: a camera looking down a folded tube.

Depth is the z-coordinate of the first wall hit along each pixel's ray
(camera frame, pinhole, pixel centres at integer coordinates), clamped to
``[d_min, d_max]``; rays that leave through the lumen read ``d_max``. The RGB
image uses the same hit points: a uniform tissue albedo lit by a light at the
camera, Lambertian in the incidence angle and falling off as
``distance**-falloff``. Specular blobs and a Gaussian blur are applied to the
image afterwards; the depth map is never blurred.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from . import io
from .errors import ContractError
from .reconstruct import CameraIntrinsics

TISSUE_RGB = (0.92, 0.56, 0.46)


@dataclass
class SceneParams:
    side: int = 64
    radius: float = 1.0
    camera_offset: float = 0.2
    fold_count: int = 3
    fold_amplitude: float = 0.15
    falloff: float = 2.0
    blur_sigma: float = 0.0
    specular_count: int = 0
    specular_radius: float = 1.5
    d_min: float = 0.1
    d_max: float = 12.0
    focal_scale: float = 0.5
    seed: int = 0

    def validate(self):
        if self.side < 2 or self.side % 2:
            raise ContractError(f"scene.side must be even and >= 2, got {self.side}")
        if not self.radius > 0:
            raise ContractError(f"scene.radius must be > 0, got {self.radius}")
        if not self.d_min > 0 or not self.d_max > self.d_min:
            raise ContractError(f"scene depth range must satisfy 0 < d_min < d_max, got [{self.d_min}, {self.d_max}]")
        if self.blur_sigma < 0:
            raise ContractError(f"scene.blur_sigma must be >= 0, got {self.blur_sigma}")
        if abs(self.camera_offset) >= self.radius * (1 - abs(self.fold_amplitude) * 1.25):
            raise ContractError("scene.camera_offset puts the camera outside the tube")
        if self.specular_count < 0 or self.fold_count < 0:
            raise ContractError("scene counts must be >= 0")
        return self

    def intrinsics(self):
        f = self.focal_scale * self.side
        c = (self.side - 1) / 2.0
        return CameraIntrinsics(fx=f, fy=f, cx=c, cy=c, width=self.side, height=self.side)


def _wall_radius(p, theta, z, phase, theta0):
    fold = np.sin(2 * np.pi * p.fold_count * z / p.d_max + phase)
    return p.radius * (1.0 + p.fold_amplitude * fold * (0.75 + 0.25 * np.cos(theta - theta0)))


def _trace(p, origin, dirs, phase, theta0, n_march=400, n_bisect=50):
    """First wall crossing along ``origin + t * dirs`` for t in (0, d_max]."""
    ts = np.linspace(p.d_max / n_march, p.d_max, n_march)

    def gap(t):
        x = origin[0] + t * dirs[..., 0]
        y = origin[1] + t * dirs[..., 1]
        return np.hypot(x, y) - _wall_radius(p, np.arctan2(y, x), t, phase, theta0)

    g = gap(ts[:, None, None])
    outside = g >= 0
    hit = outside.any(axis=0)
    first = np.argmax(outside, axis=0)
    hi = ts[first]
    lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        out = gap(mid) >= 0
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    return np.where(hit, hi, np.inf), hit


def generate_scene(p):
    """Render one scene; returns ``(rgb (3, S, S) in [0, 1], depth (S, S), intrinsics)``."""
    p.validate()
    rng = np.random.default_rng(p.seed)
    phase = rng.uniform(0, 2 * np.pi)
    theta0 = rng.uniform(0, 2 * np.pi)
    psi = rng.uniform(0, 2 * np.pi)
    k = p.intrinsics()
    origin = (p.camera_offset * np.cos(psi), p.camera_offset * np.sin(psi))

    v, u = np.indices((p.side, p.side), dtype=np.float64)
    dirs = np.stack([(u - k.cx) / k.fx, (v - k.cy) / k.fy, np.ones_like(u)], axis=-1)
    t, hit = _trace(p, origin, dirs, phase, theta0)
    depth = np.clip(np.where(hit, t, p.d_max), p.d_min, p.d_max)

    # shading at the (clamped) hit point; surface normal from the local wall slope
    tz = depth
    x = origin[0] + tz * dirs[..., 0]
    y = origin[1] + tz * dirs[..., 1]
    theta = np.arctan2(y, x)
    eps = 1e-4
    dr_dz = (_wall_radius(p, theta, tz + eps, phase, theta0) - _wall_radius(p, theta, tz - eps, phase, theta0)) / (2 * eps)
    normal = np.stack([-np.cos(theta), -np.sin(theta), dr_dz], axis=-1)
    normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
    ray_len = np.linalg.norm(dirs, axis=-1)
    to_cam = -dirs / ray_len[..., None]
    cos_i = np.clip(np.sum(normal * to_cam, axis=-1), 0.0, 1.0)
    dist = tz * ray_len
    radiance = cos_i * (p.radius / np.maximum(dist, 1e-9)) ** p.falloff
    shade = 1.0 - np.exp(-4.0 * radiance)

    rgb = np.stack([c * shade for c in TISSUE_RGB])
    if p.specular_count:
        rgb = add_speculars(rgb, p.specular_count, p.specular_radius, rng)
    if p.blur_sigma > 0:
        rgb = np.stack([gaussian_filter(ch, p.blur_sigma, mode="reflect") for ch in rgb])
    return np.clip(rgb, 0.0, 1.0), depth, k


def add_speculars(rgb, count, radius, rng):
    """Add ``count`` saturated white Gaussian blobs at random positions."""
    _, h, w = rgb.shape
    v, u = np.indices((h, w), dtype=np.float64)
    out = rgb.copy()
    for _ in range(count):
        cy, cx = rng.uniform(0, h - 1), rng.uniform(0, w - 1)
        blob = 2.0 * np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / (2 * radius**2))
        out = out + blob[None]
    return np.minimum(out, 1.0)


def split_seeds(base_seed, n_train, n_val):
    """Distinct per-sample seeds; the first ``n_train`` form the training split."""
    ss = np.random.SeedSequence(int(base_seed))
    seeds = []
    seen = set()
    pool = ss.generate_state(4 * (n_train + n_val) + 8)
    for s in pool:
        s = int(s)
        if s not in seen:
            seen.add(s)
            seeds.append(s)
        if len(seeds) == n_train + n_val:
            break
    return seeds[:n_train], seeds[n_train:]


def make_dataset(p, n_train, n_val, base_seed, out_dir):
    """Write PPM/PFM pairs plus ``manifest.json`` under ``out_dir``.

    Refuses to touch an existing manifest or sample file.
    """
    p.validate()
    if n_train < 1 or n_val < 1:
        raise ContractError(f"need n_train, n_val >= 1, got {n_train}, {n_val}")
    out_dir = os.fspath(out_dir)
    manifest_path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(manifest_path):
        raise FileExistsError(f"{manifest_path} already exists; refusing to overwrite")
    train_seeds, val_seeds = split_seeds(base_seed, n_train, n_val)
    samples = []
    for split, seeds in (("train", train_seeds), ("val", val_seeds)):
        os.makedirs(os.path.join(out_dir, split), exist_ok=True)
        for i, s in enumerate(seeds):
            sid = f"{split}_{i:05d}"
            rgb_rel = f"{split}/{sid}.ppm"
            depth_rel = f"{split}/{sid}.pfm"
            for rel in (rgb_rel, depth_rel):
                if os.path.exists(os.path.join(out_dir, rel)):
                    raise FileExistsError(f"{os.path.join(out_dir, rel)} already exists; refusing to overwrite")
            rgb, depth, _ = generate_scene(_with_seed(p, s))
            io.write_ppm(os.path.join(out_dir, rgb_rel), rgb)
            io.write_pfm(os.path.join(out_dir, depth_rel), depth)
            samples.append({"id": sid, "split": split, "seed": s, "rgb": rgb_rel, "depth": depth_rel})
    manifest = {
        "format": 1,
        "base_seed": int(base_seed),
        "depth_range": [p.d_min, p.d_max],
        "intrinsics": asdict(p.intrinsics()),
        "scene": asdict(p),
        "n_train": n_train,
        "n_val": n_val,
        "samples": samples,
    }
    io.write_json(manifest_path, manifest)
    return manifest


def _with_seed(p, seed):
    d = asdict(p)
    d["seed"] = int(seed)
    return SceneParams(**d)


@dataclass
class Dataset:
    """In-memory split: rgb (N, 3, S, S), depth (N, 1, S, S)."""

    ids: list
    rgb: np.ndarray
    depth: np.ndarray
    d_min: float
    d_max: float
    intrinsics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)


def load_manifest(root):
    return io.read_json(os.path.join(os.fspath(root), "manifest.json"))


def load_split(root, split):
    root = os.fspath(root)
    manifest = load_manifest(root)
    rows = [s for s in manifest["samples"] if s["split"] == split]
    if not rows:
        raise ContractError(f"split {split!r} is empty in {root}")
    rgb = np.stack([io.read_ppm(os.path.join(root, s["rgb"])) for s in rows])
    depth = np.stack([io.read_pfm(os.path.join(root, s["depth"]))[None] for s in rows])
    d_min, d_max = manifest["depth_range"]
    return Dataset([s["id"] for s in rows], rgb, depth, float(d_min), float(d_max), manifest.get("intrinsics", {}))


def scene_from_dict(d):
    known = SceneParams.__dataclass_fields__
    unknown = sorted(set(d) - set(known))
    if unknown:
        raise ContractError(f"unknown scene key(s): {', '.join(unknown)}")
    return SceneParams(**d)


def dump_scene(p):
    return json.dumps(asdict(p), sort_keys=True)
