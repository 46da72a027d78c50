"""Directional training experiments on synthetic data.

* :func:`gate_drift` trains the network on blurred (high-frequency-attenuated)
  scenes and reports where the four subband gates end up.
* :func:`ablation` trains paired runs with and without the GWT block (same
  seed, same data order, identical non-GWT initial weights) and compares
  validation AbsRel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import AdapterConfig, EncoderConfig, TrainConfig, evaluate_model, train_model
from .synthdata import Dataset, SceneParams, generate_scene, split_seeds

DRIFT_SCENE = SceneParams(blur_sigma=2.0)


def render_split(scene, seeds):
    rgb, depth = [], []
    for s in seeds:
        r, d, _ = generate_scene(replace(scene, seed=int(s)))
        rgb.append(r)
        depth.append(d[None])
    return Dataset([f"s{int(s)}" for s in seeds], np.stack(rgb), np.stack(depth), scene.d_min, scene.d_max)


def make_splits(scene=DRIFT_SCENE, n_train=64, n_val=16, base_seed=2024):
    train_seeds, val_seeds = split_seeds(base_seed, n_train, n_val)
    return render_split(scene, train_seeds), render_split(scene, val_seeds)


@dataclass
class DriftRun:
    seed: int
    gates: tuple  # (ll, lh, hl, hh)

    @property
    def detail_mean(self):
        return float(np.mean(self.gates[1:]))

    @property
    def hf_up(self):
        return self.detail_mean > self.gates[0]


def gate_drift(train_data, seeds=(0, 1, 2, 3, 4), steps=1000, encoder=None, adapter=None):
    runs = []
    for seed in seeds:
        cfg = TrainConfig(max_steps=steps, seed=int(seed), gwt=True, mc=True)
        res = train_model(train_data, encoder or EncoderConfig(), adapter or AdapterConfig("hybrid"), cfg)
        runs.append(DriftRun(int(seed), res.model.gwt.gate_values()))
    return runs


@dataclass
class AblationPair:
    seed: int
    abs_rel_gwt: float
    abs_rel_plain: float

    @property
    def gwt_wins(self):
        return self.abs_rel_gwt < self.abs_rel_plain


def ablation(train_data, val_data, seeds=(0, 1, 2, 3, 4), steps=300, encoder=None):
    """hybrid + GWT + MC versus hybrid without GWT (MC on), paired by seed."""
    pairs = []
    for seed in seeds:
        scores = []
        for gwt in (True, False):
            cfg = TrainConfig(max_steps=steps, seed=int(seed), gwt=gwt, mc=True)
            res = train_model(train_data, encoder or EncoderConfig(), AdapterConfig("hybrid"), cfg)
            scores.append(evaluate_model(res.model, val_data)[0].abs_rel)
        pairs.append(AblationPair(int(seed), *scores))
    return pairs
