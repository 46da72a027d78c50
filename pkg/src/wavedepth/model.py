"""Toy depth network: ViT encoder with partial freezing or LoRA, a two-stage
convolutional decoder with the gated-wavelet block, AdamW, training and
evaluation loops.

Parameters live in a flat ordered ``{name: Parameter}`` dict on
:class:`DepthModel`. Names are dotted paths; blocks count from 1
(``enc.block1.attn.q.w``) so "freeze the first m blocks" reads directly off
the name.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from . import io
from .errors import ContractError, NonFiniteError, ShapeError
from .gwt import GwtParams, gwt_forward, gwt_init
from .haar import BANDS
from .losses import LossWeights, SMOOTH_MODES, scale_invariant_loss, total_loss, valid_mask
from .metrics import aggregate, compute_metrics

log = logging.getLogger(__name__)

STRATEGIES = ("full", "lora", "hybrid")
OUTPUT_EPS = 1e-3
LORA_TARGETS = ("attn.q", "attn.k", "attn.v", "attn.out", "mlp.fc1", "mlp.fc2")


@dataclass
class EncoderConfig:
    L: int = 4
    m: int = 2
    D: int = 32
    heads: int = 2
    patch: int = 8
    side: int = 64
    decoder_width: int = 16

    def validate(self):
        if not 0 <= self.m <= self.L:
            raise ContractError(f"encoder.m must lie in [0, L={self.L}], got {self.m}")
        if self.D % self.heads:
            raise ContractError(f"encoder.D={self.D} is not divisible by heads={self.heads}")
        if self.side % self.patch:
            raise ContractError(f"encoder.side={self.side} is not divisible by patch={self.patch}")
        if self.side // self.patch < 1 or self.decoder_width < 1:
            raise ContractError("encoder sizes must be positive")
        return self

    @property
    def grid(self):
        return self.side // self.patch

    @property
    def tokens(self):
        return self.grid**2


@dataclass
class AdapterConfig:
    strategy: str = "hybrid"
    rank: int = 4
    scale: float | None = None

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ContractError(f"adapter.strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.strategy == "lora" and self.rank < 1:
            raise ContractError(f"adapter.rank must be >= 1 for lora, got {self.rank}")
        return self

    @property
    def lora_scale(self):
        return 1.0 / self.rank if self.scale is None else float(self.scale)


@dataclass
class TrainConfig:
    epochs: int = 1
    max_steps: int = 0
    batch_size: int = 8
    lr: float = 1e-3
    warmup: int = 50
    weight_decay: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    loss: LossWeights = field(default_factory=LossWeights)
    gwt: bool = True
    mc: bool = True
    smooth_mode: str = "image-weights"

    def validate(self):
        if self.batch_size < 2:
            raise ContractError(f"train.batch_size must be >= 2 (batchnorm), got {self.batch_size}")
        if self.smooth_mode not in SMOOTH_MODES:
            raise ContractError(f"train.smooth_mode must be one of {SMOOTH_MODES}, got {self.smooth_mode!r}")
        if self.lr <= 0 or self.warmup < 0 or self.weight_decay < 0:
            raise ContractError("train.lr must be > 0; warmup and weight_decay >= 0")
        if self.epochs < 1 and self.max_steps < 1:
            raise ContractError("train needs epochs >= 1 or max_steps >= 1")
        return self

    def total_steps(self, n_samples):
        per_epoch = n_samples // self.batch_size
        if per_epoch < 1:
            raise ContractError(f"{n_samples} training samples cannot fill one batch of {self.batch_size}")
        return self.max_steps if self.max_steps > 0 else self.epochs * per_epoch


# ---------------------------------------------------------------------------
# parameters


@dataclass
class DepthModel:
    encoder: EncoderConfig
    adapter: AdapterConfig
    gwt_enabled: bool
    params: dict
    gwt: GwtParams | None = None
    buffers: dict = field(default_factory=dict)
    seed: int = 0

    def parameter_list(self):
        return list(self.params.values())

    def trainable(self):
        return [p for p in self.params.values() if p.trainable]

    def n_trainable(self):
        return int(sum(p.value.size for p in self.trainable()))

    def state(self):
        """Copy of every parameter value and batchnorm buffer, keyed by name."""
        out = {name: p.data.copy() for name, p in self.params.items()}
        if self.gwt is not None:
            for b in BANDS:
                op = self.gwt.operators[b]
                out[f"{self.gwt.prefix}.{b}.bn.running_mean"] = op.running_mean.copy()
                out[f"{self.gwt.prefix}.{b}.bn.running_var"] = op.running_var.copy()
        return out

    def load_state(self, records):
        for name, p in self.params.items():
            if name not in records:
                raise ContractError(f"checkpoint lacks parameter {name}")
            p.assign(np.asarray(records[name], dtype=np.float64).reshape(p.shape))
        if self.gwt is not None:
            for b in BANDS:
                op = self.gwt.operators[b]
                op.running_mean = np.asarray(records[f"{self.gwt.prefix}.{b}.bn.running_mean"], dtype=np.float64).copy()
                op.running_var = np.asarray(records[f"{self.gwt.prefix}.{b}.bn.running_var"], dtype=np.float64).copy()


def _uniform(rng, bound, shape):
    return rng.uniform(-bound, bound, size=shape)


def _linear(params, rng, name, d_in, d_out):
    params[f"{name}.w"] = ad.Parameter(f"{name}.w", _uniform(rng, 1 / math.sqrt(d_in), (1, 1, d_in, d_out)))
    params[f"{name}.b"] = ad.Parameter(f"{name}.b", np.zeros((1, 1, 1, d_out)))


def _conv(params, rng, name, c_in, c_out):
    bound = 1 / math.sqrt(9 * c_in)
    params[f"{name}.w"] = ad.Parameter(f"{name}.w", _uniform(rng, bound, (c_out, c_in, 3, 3)))
    params[f"{name}.b"] = ad.Parameter(f"{name}.b", np.zeros((1, c_out, 1, 1)))


def init_model(encoder=None, adapter=None, gwt_enabled=True, seed=0):
    """Fresh parameters. Encoder, decoder and GWT draw from independent streams,
    so toggling the GWT block leaves every other initial weight unchanged."""
    enc = (encoder or EncoderConfig()).validate()
    adp = (adapter or AdapterConfig()).validate()
    ss = np.random.SeedSequence(int(seed))
    enc_rng, dec_rng, gwt_seed, lora_seed = ss.spawn(4)
    rng = np.random.default_rng(enc_rng)
    D = enc.D
    params = {}
    _linear(params, rng, "enc.patch", 3 * enc.patch**2, D)
    params["enc.pos"] = ad.Parameter("enc.pos", rng.normal(0.0, 0.02, size=(1, 1, enc.tokens, D)))
    for i in range(1, enc.L + 1):
        pre = f"enc.block{i}"
        for ln in ("ln1", "ln2"):
            params[f"{pre}.{ln}.g"] = ad.Parameter(f"{pre}.{ln}.g", np.ones((1, 1, 1, D)))
            params[f"{pre}.{ln}.b"] = ad.Parameter(f"{pre}.{ln}.b", np.zeros((1, 1, 1, D)))
        for proj in ("q", "k", "v", "out"):
            _linear(params, rng, f"{pre}.attn.{proj}", D, D)
        _linear(params, rng, f"{pre}.mlp.fc1", D, 4 * D)
        _linear(params, rng, f"{pre}.mlp.fc2", 4 * D, D)
    rng = np.random.default_rng(dec_rng)
    C = enc.decoder_width
    _conv(params, rng, "dec.conv1", D, C)
    _conv(params, rng, "dec.conv2", C, C)
    _conv(params, rng, "dec.head", C, 1)
    gwt = None
    if gwt_enabled:
        gwt = gwt_init(C, np.random.default_rng(gwt_seed).integers(2**63), prefix="gwt")
        for p in gwt.parameters():
            params[p.name] = p
    model = DepthModel(enc, adp, gwt_enabled, params, gwt, seed=int(seed))
    model.buffers["lora_seed"] = lora_seed
    apply_strategy(model, adp, enc.m)
    return model


def encoder_block_of(name):
    """Block index (1-based) of an encoder parameter; 0 for patch/pos; None otherwise."""
    if not name.startswith("enc."):
        return None
    part = name.split(".")[1]
    if part.startswith("block"):
        return int(part[len("block") :])
    return 0


def _is_lora(name):
    return name.endswith(".lora_a") or name.endswith(".lora_b")


def apply_strategy(model, adapter, m):
    """Set trainable flags for ``full`` / ``hybrid`` / ``lora`` and return them.

    hybrid freezes blocks 1..m; the patch embedding and positional encodings
    count as block 1 (frozen whenever m >= 1). lora freezes every base encoder
    weight and adds rank-r factors to each attention and MLP map. Decoder and
    GWT parameters are always trainable.
    """
    adapter = adapter.validate()
    L = model.encoder.L
    if not 0 <= m <= L:
        raise ContractError(f"m={m} outside [0, L={L}]")
    if adapter.strategy == "lora":
        _inject_lora(model, adapter)
    flags = {}
    for name, p in model.params.items():
        block = encoder_block_of(name)
        if block is None:
            flag = True
        elif adapter.strategy == "full":
            flag = not _is_lora(name)
        elif adapter.strategy == "hybrid":
            flag = (max(block, 1) > m) and not _is_lora(name)
        else:
            flag = _is_lora(name)
        p.set_trainable(flag)
        flags[name] = flag
    model.adapter = adapter
    model.encoder.m = m
    return flags


def _inject_lora(model, adapter):
    rng = np.random.default_rng(model.buffers.get("lora_seed", model.seed))
    r = adapter.rank
    added = {}
    for name, p in model.params.items():
        if not name.endswith(".w") or not any(f".{t}.w" in name for t in LORA_TARGETS) or not name.startswith("enc.block"):
            continue
        base = name[: -len(".w")]
        if f"{base}.lora_a" in model.params:
            continue
        d_in, d_out = p.shape[-2:]
        added[f"{base}.lora_a"] = ad.Parameter(f"{base}.lora_a", _uniform(rng, 1 / math.sqrt(d_in), (1, 1, d_in, r)))
        added[f"{base}.lora_b"] = ad.Parameter(f"{base}.lora_b", np.zeros((1, 1, r, d_out)))
    model.params.update(added)


# ---------------------------------------------------------------------------
# forward


def _linear_fwd(model, x, name):
    P = model.params
    y = ad.add(ad.matmul(x, P[f"{name}.w"].value), P[f"{name}.b"].value)
    a = P.get(f"{name}.lora_a")
    if a is not None:
        delta = ad.matmul(ad.matmul(x, a.value), P[f"{name}.lora_b"].value)
        y = ad.add(y, ad.scale(delta, model.adapter.lora_scale))
    return y


def _layernorm_fwd(model, x, name):
    P = model.params
    return ad.add(ad.mul(ad.layernorm(x), P[f"{name}.g"].value), P[f"{name}.b"].value)


def _attention(model, x, pre):
    cfg = model.encoder
    B, _, K, D = x.shape
    H, dh = cfg.heads, cfg.D // cfg.heads

    def heads(t):
        return ad.permute(ad.reshape(t, (B, K, H, dh)), (0, 2, 1, 3))

    q = heads(_linear_fwd(model, x, f"{pre}.q"))
    k = heads(_linear_fwd(model, x, f"{pre}.k"))
    v = heads(_linear_fwd(model, x, f"{pre}.v"))
    scores = ad.scale(ad.matmul(q, ad.permute(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    ctx = ad.matmul(ad.softmax(scores), v)
    ctx = ad.reshape(ad.permute(ctx, (0, 2, 1, 3)), (B, 1, K, D))
    return _linear_fwd(model, ctx, f"{pre}.out")


def encoder_forward(image, model, cfg=None, positional=True):
    """Image (B, 3, S, S) in [0, 1] to tokens z_L of shape (B, 1, K, D)."""
    cfg = cfg or model.encoder
    x = ad.as_tensor(image)
    if x.shape[1:] != (3, cfg.side, cfg.side):
        raise ShapeError("encoder_forward", f"expected (B, 3, {cfg.side}, {cfg.side})", [x.shape])
    P = model.params
    z = _linear_fwd(model, ad.patchify(ad.add(x, -0.5), cfg.patch), "enc.patch")
    if positional:
        z = ad.add(z, P["enc.pos"].value)
    for i in range(1, cfg.L + 1):
        pre = f"enc.block{i}"
        z = ad.add(z, _attention(model, _layernorm_fwd(model, z, f"{pre}.ln1"), f"{pre}.attn"))
        h = ad.relu(_linear_fwd(model, _layernorm_fwd(model, z, f"{pre}.ln2"), f"{pre}.mlp.fc1"))
        z = ad.add(z, _linear_fwd(model, h, f"{pre}.mlp.fc2"))
    return z


def _conv_fwd(model, x, name):
    P = model.params
    return ad.conv3x3(x, P[f"{name}.w"].value, P[f"{name}.b"].value)


def decoder_forward(tokens, model, gwt_enabled=None, mode="train"):
    """Tokens (B, 1, K, D) to a strictly positive depth map (B, 1, S, S)."""
    cfg = model.encoder
    z = ad.as_tensor(tokens)
    if z.shape[1:] != (1, cfg.tokens, cfg.D):
        raise ShapeError("decoder_forward", f"expected (B, 1, {cfg.tokens}, {cfg.D})", [z.shape])
    use_gwt = model.gwt_enabled if gwt_enabled is None else gwt_enabled
    if use_gwt and model.gwt is None:
        raise ContractError("decoder_forward: model was built without a GWT block")
    B = z.shape[0]
    x = ad.reshape(ad.permute(z, (0, 3, 1, 2)), (B, cfg.D, cfg.grid, cfg.grid))
    x = ad.relu(_conv_fwd(model, ad.upsample2x(x, "nearest"), "dec.conv1"))
    x = ad.relu(_conv_fwd(model, ad.upsample2x(x, "nearest"), "dec.conv2"))
    if use_gwt:
        x = gwt_forward(x, model.gwt, mode)
    d = ad.add(ad.softplus(_conv_fwd(model, x, "dec.head")), OUTPUT_EPS)
    while d.shape[-1] < cfg.side:
        d = ad.upsample2x(d, "bilinear")
    if d.shape[-1] != cfg.side:
        raise ShapeError("decoder_forward", f"cannot reach side {cfg.side} by doubling", [d.shape])
    return d


def predict(model, image, mode="eval"):
    return decoder_forward(encoder_forward(image, model), model, mode=mode)


# ---------------------------------------------------------------------------
# optimizer


def _decays(name):
    # no decay on biases, norm parameters, gates and positional encodings
    last = name.rsplit(".", 1)[-1]
    return last in ("w", "lora_a", "lora_b") and ".bn." not in name


@dataclass
class AdamWState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def lr_at(base_lr, step, warmup):
    return base_lr * (1.0 if warmup <= 0 else min(1.0, step / warmup))


def adamw_step(params, grads, state, cfg, step=None):
    """One bias-corrected AdamW update with decoupled weight decay.

    ``params`` is an iterable of :class:`Parameter`; frozen ones are skipped
    entirely. A trainable parameter missing from ``grads`` gets a zero
    gradient. Raises :class:`NonFiniteError` before touching anything if a
    gradient is not finite.
    """
    params = [p for p in params if p.trainable]
    for p in params:
        g = grads.get(p.name)
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {p.name}; step aborted")
    t = state.step + 1 if step is None else int(step)
    lr = lr_at(cfg.lr, t, cfg.warmup)
    b1, b2 = cfg.beta1, cfg.beta2
    for p in params:
        g = grads.get(p.name)
        if g is None:
            g = np.zeros(p.shape)
        m = state.m.get(p.name, np.zeros(p.shape))
        v = state.v.get(p.name, np.zeros(p.shape))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new = p.data - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        if cfg.weight_decay and _decays(p.name):
            new = new - lr * cfg.weight_decay * p.data
        p.assign(new)
        state.m[p.name] = m
        state.v[p.name] = v
    state.step = t
    return lr


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: DepthModel
    history: list
    optimizer: AdamWState
    checkpoint_path: str | None = None
    history_path: str | None = None


HISTORY_HEADER = ("step", "lr", "L_scale", "L_grad", "L_smooth", "total", "loss") + tuple(f"gate_{b}" for b in BANDS)


def _softplus_inv(y):
    return float(y + np.log(-np.expm1(-y)))


def run_config_dict(encoder, adapter, train_cfg, extra=None):
    d = {"encoder": asdict(encoder), "adapter": asdict(adapter), "train": asdict(train_cfg)}
    if extra:
        d.update(extra)
    return d


def train_model(data, encoder=None, adapter=None, train_cfg=None, out_dir=None, extra_config=None):
    """Deterministic training on an in-memory :class:`~wavedepth.synthdata.Dataset`.

    With ``mc`` on the objective is the full weighted loss; with ``mc`` off it
    is the scale-invariant term alone. Writes ``checkpoint.spdk`` and
    ``history.csv`` into ``out_dir`` when given.
    """
    enc = (encoder or EncoderConfig()).validate()
    adp = (adapter or AdapterConfig()).validate()
    cfg = (train_cfg or TrainConfig()).validate()
    if data.rgb.shape[-1] != enc.side:
        raise ContractError(f"data side {data.rgb.shape[-1]} does not match encoder side {enc.side}")
    model = init_model(enc, adp, cfg.gwt, cfg.seed)
    # start the output head at the training set's median depth
    valid = (data.depth > 0) & (data.depth >= data.d_min) & (data.depth <= data.d_max)
    model.params["dec.head.b"].assign(np.full((1, 1, 1, 1), _softplus_inv(float(np.median(data.depth[valid])) - OUTPUT_EPS)))
    opt = AdamWState()
    n = len(data)
    steps = cfg.total_steps(n)
    if cfg.warmup > steps:
        raise ContractError(f"train.warmup={cfg.warmup} exceeds the {steps} total steps")
    per_epoch = n // cfg.batch_size
    order_rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 7]))
    history = []
    config_block = run_config_dict(enc, adp, cfg, extra_config)
    last_good = None
    order = None
    for step in range(1, steps + 1):
        slot = (step - 1) % per_epoch
        if slot == 0:
            order = order_rng.permutation(n)
        idx = np.sort(order[slot * cfg.batch_size : (slot + 1) * cfg.batch_size])
        rgb, gt = data.rgb[idx], data.depth[idx]
        mask = valid_mask(gt, data.d_min, data.d_max)
        with ad.Tape() as tape:
            pred = predict(model, rgb, mode="train")
            full, parts = total_loss(pred, gt, rgb, mask, cfg.loss, cfg.smooth_mode)
            root = full if cfg.mc else scale_invariant_loss(pred, gt, mask, cfg.loss.lambda_s)
        loss_value = root.item()
        if not np.isfinite(loss_value):
            path = _save_last_good(out_dir, last_good, config_block)
            raise NonFiniteError(f"non-finite loss at step {step}; last good checkpoint: {path}")
        grads = ad.backward(tape, root)
        last_good = (model.state(), _opt_records(opt), opt.step)
        lr = adamw_step(model.parameter_list(), grads, opt, cfg)
        gates = model.gwt.gate_values() if model.gwt is not None else (float("nan"),) * 4
        history.append((step, lr, parts["scale"], parts["grad"], parts["smooth"], parts["total"], loss_value) + gates)
        if step == 1 or step % 50 == 0 or step == steps:
            log.info("step %d/%d loss %.5f gates %s", step, steps, loss_value, np.round(gates, 4))
    result = TrainResult(model, history, opt)
    if out_dir is not None:
        result.checkpoint_path = save_checkpoint(os.path.join(out_dir, "checkpoint.spdk"), model, opt, config_block)
        result.history_path = os.path.join(out_dir, "history.csv")
        io.write_csv(result.history_path, HISTORY_HEADER, history)
    return result


def train(manifest_dir, encoder=None, adapter=None, train_cfg=None, out_dir=None):
    """Train on the ``train`` split of a dataset written by ``make_dataset``."""
    from .synthdata import load_split

    return train_model(load_split(manifest_dir, "train"), encoder, adapter, train_cfg, out_dir)


def _opt_records(opt):
    rec = {f"opt.m.{k}": v.copy() for k, v in opt.m.items()}
    rec.update({f"opt.v.{k}": v.copy() for k, v in opt.v.items()})
    return rec


def _save_last_good(out_dir, last_good, config_block):
    if out_dir is None or last_good is None:
        return None
    state, opt_rec, step = last_good
    records = dict(state)
    records.update(opt_rec)
    cfg = dict(config_block, optimizer_step=step)
    path = os.path.join(out_dir, "checkpoint.last_good.spdk")
    io.write_checkpoint(path, cfg, records)
    return path


def save_checkpoint(path, model, opt, config_block):
    records = model.state()
    records.update(_opt_records(opt))
    cfg = dict(config_block, optimizer_step=opt.step, gwt_enabled=model.gwt_enabled, seed=model.seed)
    io.write_checkpoint(path, cfg, records)
    return path


def load_checkpoint(path):
    """Rebuild a model (and optimizer state) from a checkpoint file."""
    cfg, records = io.read_checkpoint(path)
    enc = EncoderConfig(**cfg["encoder"])
    adp = AdapterConfig(**cfg["adapter"])
    model = init_model(enc, adp, cfg.get("gwt_enabled", True), cfg.get("seed", 0))
    model.load_state(records)
    opt = AdamWState(step=int(cfg.get("optimizer_step", 0)))
    for k, v in records.items():
        if k.startswith("opt.m."):
            opt.m[k[len("opt.m.") :]] = v
        elif k.startswith("opt.v."):
            opt.v[k[len("opt.v.") :]] = v
    return model, opt, cfg


def evaluate_model(model, data, gt_as_pred=False):
    """Eval-mode prediction per frame, metrics over the depth-range mask, pooled."""
    rows = []
    for i, fid in enumerate(data.ids):
        gt = data.depth[i : i + 1]
        mask = valid_mask(gt, data.d_min, data.d_max)
        if gt_as_pred:
            pred = gt
        else:
            with ad.no_tape():
                pred = predict(model, data.rgb[i : i + 1], mode="eval").data
        rows.append((fid, compute_metrics(pred, gt, mask)))
    return aggregate([r for _, r in rows]), rows


def evaluate(checkpoint_path, data_dir, split="val", gt_as_pred=False):
    from .synthdata import load_split

    model, _, _ = load_checkpoint(checkpoint_path)
    return evaluate_model(model, load_split(data_dir, split), gt_as_pred)


SWEEP_KEYS = {"lgrad": "lambda_grad", "lsmooth": "lambda_smooth", "ls": "lambda_s"}


def parse_grid(specs):
    """``["lgrad=0,0.1,0.2", "lsmooth=0,0.1"]`` -> ``{"lambda_grad": [...], ...}`` (order kept)."""
    grid = {}
    for spec in specs:
        key, sep, values = spec.partition("=")
        if not sep or key not in SWEEP_KEYS:
            raise ContractError(f"bad grid axis {spec!r}; expected one of {sorted(SWEEP_KEYS)} as key=v1,v2,...")
        try:
            grid[SWEEP_KEYS[key]] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ContractError(f"bad grid values in {spec!r}") from None
        if not grid[SWEEP_KEYS[key]]:
            raise ContractError(f"grid axis {key!r} has no values")
    if len(grid) != 2:
        raise ContractError(f"sweep needs exactly two grid axes, got {len(grid)}")
    return grid


def sweep(train_data, val_data, grid, encoder=None, adapter=None, train_cfg=None):
    """Train once per cell of a two-axis loss-weight grid and evaluate on ``val_data``.

    Returns ``(axes, rows)`` with one row per cell: the two weights followed by
    the pooled validation metrics.
    """
    base = train_cfg or TrainConfig()
    (ka, va), (kb, vb) = grid.items()
    rows = []
    for a in va:
        for b in vb:
            w = asdict(base.loss)
            w.update({ka: a, kb: b})
            cfg = TrainConfig(**{**asdict(base), "loss": LossWeights(**w)})
            res = train_model(train_data, encoder, adapter, cfg)
            report, _ = evaluate_model(res.model, val_data)
            rows.append((a, b, report))
    return (ka, kb), rows
