"""
Does the gated wavelet block help?
==================================

Paired comparison: for each seed, train the hybrid-adapted network with and
without the gated wavelet block (same data order, same initial weights for
every shared parameter) and compare validation AbsRel.

    python demos/gwt_ablation.py --steps 300 --seeds 0 1 2
"""

import argparse

from wavedepth.experiments import ablation, make_splits

parser = argparse.ArgumentParser(description=__doc__.split("\n")[1])
parser.add_argument("--steps", type=int, default=300)
parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
args = parser.parse_args()

train, val = make_splits()
print("seed   AbsRel with block   AbsRel without   lower")
for p in ablation(train, val, seeds=args.seeds, steps=args.steps):
    print(f"{p.seed:4d} {p.abs_rel_gwt:19.4f} {p.abs_rel_plain:16.4f}   {'with' if p.gwt_wins else 'without'}")
