"""
From a depth map to a point cloud
=================================

Train the toy network for a few steps, predict depth for one validation
scene, back-project both prediction and ground truth through the pinhole
intrinsics, and write coloured PLY files you can open in any mesh viewer.

    python demos/depth_to_points.py --out /tmp/points --steps 100
"""

import argparse
import os

import numpy as np

from wavedepth.experiments import DRIFT_SCENE, make_splits
from wavedepth.losses import valid_mask
from wavedepth.metrics import compute_metrics
from wavedepth.model import TrainConfig, predict, train_model
from wavedepth.reconstruct import backproject, export_ply

parser = argparse.ArgumentParser(description=__doc__.split("\n")[1])
parser.add_argument("--out", required=True, help="directory for the PLY files")
parser.add_argument("--steps", type=int, default=100)
args = parser.parse_args()
os.makedirs(args.out, exist_ok=True)

train, val = make_splits()
model = train_model(train, train_cfg=TrainConfig(max_steps=args.steps, warmup=min(50, args.steps))).model

# one validation frame; the scene parameters fix the camera intrinsics
rgb, gt = val.rgb[:1], val.depth[:1]
pred = predict(model, rgb).data
mask = valid_mask(gt, val.d_min, val.d_max)
print("frame metrics:", {k: round(v, 4) for k, v in compute_metrics(pred, gt, mask).as_dict().items()})

k = DRIFT_SCENE.intrinsics()
for name, depth in (("predicted", pred), ("ground_truth", gt)):
    pc = backproject(depth[0, 0], mask.mask[0, 0], k, rgb=rgb[0])
    path = os.path.join(args.out, f"{name}.ply")
    export_ply(pc, path)
    print(f"{name}: {len(pc)} points, z in [{pc.points[:, 2].min():.2f}, {pc.points[:, 2].max():.2f}] -> {path}")

err = np.abs(pred - gt)[mask.mask]
print(f"median |pred - gt| over valid pixels: {np.median(err):.3f}")
