"""
Where do the subband gates go during training?
==============================================

The gated wavelet block scales each of its four Haar subbands (LL, LH, HL,
HH) by a learnable scalar that starts at 1. This script trains the toy depth
network on blurred scenes, whose images lack high-frequency detail, and
prints the gate trajectories so you can see which subbands the network
amplifies.

    python demos/gate_drift.py --steps 300 --seeds 0 1
"""

import argparse

import numpy as np

from wavedepth.experiments import make_splits
from wavedepth.model import AdapterConfig, EncoderConfig, HISTORY_HEADER, TrainConfig, train_model

parser = argparse.ArgumentParser(description=__doc__.split("\n")[1])
parser.add_argument("--steps", type=int, default=300)
parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
args = parser.parse_args()

# 64 training scenes blurred with sigma = 2 px
train, _ = make_splits()
gate_cols = [HISTORY_HEADER.index(f"gate_{b}") for b in ("ll", "lh", "hl", "hh")]

for seed in args.seeds:
    cfg = TrainConfig(max_steps=args.steps, seed=seed, warmup=min(50, args.steps))
    res = train_model(train, EncoderConfig(), AdapterConfig("hybrid"), cfg)
    h = np.array(res.history)
    print(f"\nseed {seed}: step     ll      lh      hl      hh")
    for step in np.unique(np.linspace(1, len(h), 6).astype(int)):
        g = h[step - 1, gate_cols]
        print(f"        {step:6d} " + " ".join(f"{v:7.4f}" for v in g))
    ll, detail = h[-1, gate_cols[0]], h[-1, gate_cols[1:]].mean()
    print(f"  final: ll {ll:.4f}, mean detail gate {detail:.4f} -> {'detail' if detail > ll else 'approximation'} band favoured")
