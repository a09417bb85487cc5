"""Gradient-based optimization of lattice tables.

The forward pass is the inference pipeline on real-valued tables, run
on mini-batches of crops without the final clamp/quantization: oriented
patch gathers, multilinear queries, block unrotation, fusion, optional
residual baseline.  Because a query is a fixed convex blend of corner
entries, the map from entries to output is piecewise linear and the
chain rule runs through the cached corner weights; fusion weights are
differentiated through the softmax (and, for the soft-median, through
the distance terms and the log-temperature).

Everything is float64 numpy with a seeded generator and fixed reduction
order, so a (seed, config) pair reproduces training bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lut import (CoeffLut, RealLut, corner_weights, lattice_size, quantize,
                  round_half_away)
from .metrics import psnr
from .orientation import (KernelPattern, OrientationSet, SQUARE_PATTERN,
                          block_permutation)
from .pipeline import PipelineConfig, bicubic_resize, restore_image, _resize_axis
from .pooling import PoolingSpec, softmax


class TrainingDivergedError(Exception):
    """Raised when a step produces a non-finite loss."""


@dataclass
class TrainConfig:
    iterations: int = 2000
    batch_size: int = 16
    crop: int = 16                 # crop side on the input grid
    lr: float = 1e-4
    loss: str = "charbonnier"      # charbonnier | l1 | l2
    epsilon: float = 1e-3          # charbonnier knee
    regularizer: str = "entropy"   # entropy | none
    reg_weight: float = 1e-3
    seed: int = 0
    augment: bool = True
    val_interval: int = 100
    finetune_lr_factor: float = 0.1
    tau_lr_factor: float = 50.0    # log-temperature moves on its own scale

    def __post_init__(self):
        if self.loss not in ("charbonnier", "l1", "l2"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.regularizer not in ("entropy", "none"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")


def charbonnier(pred, target, epsilon: float = 1e-3) -> float:
    """Smooth L1: mean sqrt(diff**2 + epsilon**2)."""
    d = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(np.sqrt(d * d + epsilon * epsilon)))


def entropy_regularizer(weights) -> float:
    """Negative entropy of fusion weights, sum(alpha * log alpha).

    Minimal (-log k) at uniform weights, maximal (0) at a one-hot
    vector; adding it to the loss therefore pushes weights toward the
    uniform blend.  Batched input is averaged over the leading axes.
    """
    w = np.asarray(weights, dtype=np.float64)
    terms = np.where(w > 0.0, w * np.log(np.maximum(w, 1e-300)), 0.0)
    per_point = terms.sum(axis=-1)
    return float(np.mean(per_point))


def cosine_lr(step: int, total_steps: int, lr_init: float) -> float:
    """Half-cosine decay from lr_init at step 0 to zero at total_steps."""
    if total_steps < 1:
        raise ValueError("total_steps must be positive")
    if step < 0 or step > total_steps:
        raise ValueError(f"step {step} outside schedule horizon 0..{total_steps}")
    return lr_init * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


@dataclass
class AdamState:
    exp_avg: np.ndarray
    exp_avg_sq: np.ndarray

    @classmethod
    def like(cls, values: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(values), np.zeros_like(values))


def adam_step(values: np.ndarray, grad: np.ndarray, state: AdamState,
              step_index: int, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place Adam update; step_index counts completed steps (0-based)."""
    if values.shape != grad.shape:
        raise ValueError("gradient shape does not match parameters")
    if step_index < 0:
        raise ValueError("step_index must be nonnegative")
    t = step_index + 1
    state.exp_avg *= beta1
    state.exp_avg += (1.0 - beta1) * grad
    state.exp_avg_sq *= beta2
    state.exp_avg_sq += (1.0 - beta2) * grad * grad
    m_hat = state.exp_avg / (1.0 - beta1 ** t)
    v_hat = state.exp_avg_sq / (1.0 - beta2 ** t)
    values -= lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass
class TrainableLut:
    """A real-valued table plus its gradient and optimizer buffers."""

    lut: RealLut
    lr_factor: float = 1.0
    grad: np.ndarray = None
    adam: AdamState = None

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.lut.entries)
        if self.adam is None:
            self.adam = AdamState.like(self.lut.entries)

    def zero_grad(self):
        self.grad[...] = 0.0


@dataclass
class TrainablePipeline:
    """Single-stage pipeline with trainable tables (one per pattern)."""

    task: str
    scale: int
    luts: list
    patterns: list = field(default_factory=lambda: [SQUARE_PATTERN])
    orientations: OrientationSet = field(default_factory=OrientationSet)
    pooling: str = "average"
    residual: bool = True
    norm: str = "l2"
    coeff: TrainableLut = None
    coeff_pattern: KernelPattern = SQUARE_PATTERN
    log_tau: np.ndarray = None
    tau_trainable: bool = False
    tau_grad: np.ndarray = None
    tau_adam: AdamState = None

    def __post_init__(self):
        if self.log_tau is None:
            self.log_tau = np.zeros(1)
        self.log_tau = np.asarray(self.log_tau, dtype=np.float64).reshape(1)
        if self.tau_grad is None:
            self.tau_grad = np.zeros(1)
        if self.tau_adam is None:
            self.tau_adam = AdamState.like(self.log_tau)
        if len(self.luts) != len(self.patterns):
            raise ValueError("one trainable table per pattern is required")
        if self.pooling == "oap" and self.coeff is None:
            raise ValueError("oap training needs a coefficient table")

    @classmethod
    def zero_init(cls, task: str, scale: int, q: int,
                  patterns=None, pooling: str = "average",
                  residual: bool = True, **kw) -> "TrainablePipeline":
        patterns = list(patterns) if patterns else [SQUARE_PATTERN]
        m = scale * scale if task == "sr" else 1
        luts = []
        for p in patterns:
            shape = (lattice_size(q),) * p.n + (m,)
            luts.append(TrainableLut(RealLut(q, p.n, m, np.zeros(shape))))
        return cls(task=task, scale=scale, luts=luts, patterns=patterns,
                   pooling=pooling, residual=residual, **kw)

    @property
    def rs(self) -> int:
        return self.scale if self.task == "sr" else 1

    @property
    def tau(self) -> float:
        return float(np.exp(self.log_tau[0]))

    def parameters(self):
        params = list(self.luts)
        if self.pooling == "oap" and self.coeff is not None:
            params.append(self.coeff)
        return params

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()
        self.tau_grad[...] = 0.0

    def snapshot(self):
        return ([tl.lut.entries.copy() for tl in self.luts],
                self.coeff.lut.entries.copy() if self.coeff is not None else None,
                self.log_tau.copy())

    def load_snapshot(self, snap):
        entries, coeff_entries, log_tau = snap
        for tl, e in zip(self.luts, entries):
            tl.lut.entries[...] = e
        if coeff_entries is not None:
            self.coeff.lut.entries[...] = coeff_entries
        self.log_tau[...] = log_tau

    def to_config(self) -> PipelineConfig:
        pool = PoolingSpec(
            kind=self.pooling, tau=self.tau, norm=self.norm,
            coeff_lut=self.coeff.lut if (self.pooling == "oap" and self.coeff) else None,
            tau_trainable=self.tau_trainable)
        return PipelineConfig(
            task=self.task, scale=self.scale, patterns=list(self.patterns),
            orientations=self.orientations, pooling=pool, residual=self.residual,
            stages=[[tl.lut for tl in self.luts]],
            coeff_pattern=self.coeff_pattern)


@dataclass
class Batch:
    inputs: np.ndarray    # (B, h, w) float64 degraded crops
    targets: np.ndarray   # (B, h*rs, w*rs) float64 clean crops


def sample_batch(rng: np.random.Generator, pairs, crop: int, rs: int,
                 batch_size: int, augment: bool = True) -> Batch:
    """Random aligned crop pairs with optional rotation/flip augmentation."""
    ins, tgts = [], []
    for _ in range(batch_size):
        inp, tgt = pairs[rng.integers(len(pairs))]
        h, w = inp.shape
        if h < crop or w < crop:
            raise ValueError(f"image {inp.shape} smaller than crop {crop}")
        i = int(rng.integers(h - crop + 1))
        j = int(rng.integers(w - crop + 1))
        ci = np.asarray(inp[i:i + crop, j:j + crop], dtype=np.float64)
        ct = np.asarray(tgt[rs * i: rs * (i + crop), rs * j: rs * (j + crop)],
                        dtype=np.float64)
        if augment:
            r = int(rng.integers(4))
            f = int(rng.integers(2))
            ci = np.rot90(ci, r)
            ct = np.rot90(ct, r)
            if f:
                ci = np.flip(ci, axis=1)
                ct = np.flip(ct, axis=1)
        ins.append(np.ascontiguousarray(ci))
        tgts.append(np.ascontiguousarray(ct))
    return Batch(np.stack(ins), np.stack(tgts))


def _gather_batch(padded, offsets, pad, h, w):
    planes = [padded[:, pad + dr: pad + dr + h, pad + dc: pad + dc + w]
              for dr, dc in offsets]
    return np.stack(planes, axis=-1)


def _to_blocks(raster: np.ndarray, rs: int) -> np.ndarray:
    b, hh, ww = raster.shape
    h, w = hh // rs, ww // rs
    return (raster.reshape(b, h, rs, w, rs)
            .transpose(0, 1, 3, 2, 4)
            .reshape(b * h * w, rs * rs))


def _decompose_clamped(patches: np.ndarray, q: int):
    # training crops are already in range; clip guards augmentation noise
    v = np.clip(patches, 0.0, 255.0) / float(2 ** q)
    base = np.floor(v)
    return base.astype(np.int64), v - base


def _loss_and_grad(diff: np.ndarray, kind: str, epsilon: float):
    count = diff.size
    if kind == "charbonnier":
        root = np.sqrt(diff * diff + epsilon * epsilon)
        return float(np.mean(root)), diff / root / count
    if kind == "l1":
        return float(np.mean(np.abs(diff))), np.sign(diff) / count
    root = diff * diff
    return float(np.mean(root)), 2.0 * diff / count


def _forward(tp: TrainablePipeline, batch: Batch, cfg: TrainConfig,
             need_grad: bool):
    b, h, w = batch.inputs.shape
    rs = tp.rs
    m = rs * rs
    count = b * h * w
    k = tp.orientations.k
    npat = len(tp.patterns)
    pad = max(p.reach for p in tp.patterns)
    padded = np.pad(batch.inputs, ((0, 0), (pad, pad), (pad, pad)), mode="edge")

    xs = np.zeros((k, count, m))
    raws = {}       # (pattern, rotation) -> (idx, weights, perm)
    for pi, (pattern, tl) in enumerate(zip(tp.patterns, tp.luts)):
        flat = tl.lut.entries.reshape(-1, m)
        lattice = tl.lut.lattice_points
        for ri, r in enumerate(tp.orientations.rotations):
            patches = _gather_batch(padded, pattern.rotated(r), pad, h, w)
            base, frac = _decompose_clamped(patches.reshape(count, pattern.n), tl.lut.q)
            idx, wts = corner_weights(base, frac, lattice)
            out = np.zeros((count, m))
            for c in range(idx.shape[1]):
                out += wts[:, c, None] * flat[idx[:, c]]
            perm = block_permutation(m, r) if m > 1 else None
            if perm is not None:
                out = out[:, perm]
            xs[ri] += out / npat
            if need_grad:
                raws[(pi, ri)] = (idx, wts, perm)

    cache = {"xs": xs, "count": count, "m": m, "k": k}

    if tp.pooling == "average":
        alpha = np.full((k, count), 1.0 / k)
    elif tp.pooling == "gmp":
        tau = tp.tau
        mean = np.mean(xs, axis=0)
        dev = xs - mean[None]
        if tp.norm == "l2":
            dist = np.sqrt(np.sum(dev * dev, axis=-1))
        else:
            dist = np.sum(np.abs(dev), axis=-1)
        alpha = softmax(-dist / tau, axis=0)
        cache.update(dev=dev, dist=dist, tau=tau)
    else:  # oap
        cp = tp.coeff_pattern
        cpad = cp.reach
        cpadded = np.pad(batch.inputs, ((0, 0), (cpad, cpad), (cpad, cpad)),
                         mode="edge")
        cpatches = _gather_batch(cpadded, cp.offsets, cpad, h, w)
        cbase, cfrac = _decompose_clamped(cpatches.reshape(count, cp.n),
                                          tp.coeff.lut.q)
        cidx, cwts = corner_weights(cbase, cfrac, tp.coeff.lut.lattice_points)
        cflat = tp.coeff.lut.entries.reshape(-1, k)
        logits = np.zeros((count, k))
        for c in range(cidx.shape[1]):
            logits += cwts[:, c, None] * cflat[cidx[:, c]]
        alpha = softmax(logits, axis=1).T
        cache.update(cidx=cidx, cwts=cwts)

    fused = np.sum(alpha[:, :, None] * xs, axis=0)

    if tp.residual:
        if rs > 1:
            up = _resize_axis(batch.inputs, h * rs, float(rs), 1)
            up = _resize_axis(up, w * rs, float(rs), 2)
            baseline = _to_blocks(up, rs)
        else:
            baseline = batch.inputs.reshape(count, 1)
        pred = fused + baseline
    else:
        pred = fused

    target = _to_blocks(batch.targets, rs)
    diff = pred - target
    fid, dfid = _loss_and_grad(diff, cfg.loss, cfg.epsilon)

    reg = 0.0
    if cfg.regularizer == "entropy" and cfg.reg_weight != 0.0:
        reg = entropy_regularizer(alpha.T)
    total = fid + cfg.reg_weight * reg

    cache.update(alpha=alpha, raws=raws, dfid=dfid if need_grad else None)
    losses = {"total": total, "fidelity": fid, "regularizer": reg}
    return losses, cache


def loss_only(tp: TrainablePipeline, batch: Batch, cfg: TrainConfig) -> float:
    losses, _ = _forward(tp, batch, cfg, need_grad=False)
    return losses["total"]


def forward_backward(tp: TrainablePipeline, batch: Batch,
                     cfg: TrainConfig) -> dict:
    """One training step's loss plus gradients (accumulated on tp)."""
    tp.zero_grad()
    losses, cache = _forward(tp, batch, cfg, need_grad=True)

    xs = cache["xs"]
    alpha = cache["alpha"]
    g = cache["dfid"]                           # dL/dpred, (N, m)
    k, count, m = xs.shape
    npat = len(tp.patterns)

    grad_xs = alpha[:, :, None] * g[None]       # direct path through the blend

    needs_alpha_grad = tp.pooling in ("gmp", "oap")
    if needs_alpha_grad:
        c = np.einsum("nm,knm->kn", g, xs)      # dL/dalpha
        if cfg.regularizer == "entropy" and cfg.reg_weight != 0.0:
            c = c + cfg.reg_weight * (
                np.log(np.maximum(alpha, 1e-300)) + 1.0) / count

    if tp.pooling == "gmp":
        tau = cache["tau"]
        dev = cache["dev"]
        dist = cache["dist"]
        # softmax over orientations: u_i = -dist_i / tau
        s = alpha * (c - np.sum(alpha * c, axis=0, keepdims=True))
        ddist = -s / tau
        if tp.tau_trainable:
            tp.tau_grad[0] = float(np.sum(s * dist) / tau)
        if tp.norm == "l2":
            unit = dev / np.maximum(dist, 1e-300)[:, :, None]
        else:
            unit = np.sign(dev)
        t = ddist[:, :, None] * unit
        grad_xs += t - t.sum(axis=0, keepdims=True) / k
    elif tp.pooling == "oap":
        arow = alpha.T                           # (N, k)
        crow = c.T
        srow = arow * (crow - np.sum(arow * crow, axis=1, keepdims=True))
        cflat_grad = tp.coeff.grad.reshape(-1, k)
        cidx, cwts = cache["cidx"], cache["cwts"]
        for corner in range(cidx.shape[1]):
            np.add.at(cflat_grad, cidx[:, corner], cwts[:, corner, None] * srow)

    for pi, tl in enumerate(tp.luts):
        flat_grad = tl.grad.reshape(-1, m)
        for ri in range(k):
            idx, wts, perm = cache["raws"][(pi, ri)]
            gout = grad_xs[ri] / npat
            if perm is not None:
                graw = np.empty_like(gout)
                graw[:, perm] = gout
            else:
                graw = gout
            for corner in range(idx.shape[1]):
                np.add.at(flat_grad, idx[:, corner], wts[:, corner, None] * graw)

    return losses


@dataclass
class TrainReport:
    steps: int
    history: list
    val_history: list
    best_step: int
    best_val_psnr: float


def evaluate_pairs(config: PipelineConfig, pairs, border: int = 0) -> float:
    """Mean PSNR of the configured pipeline over (input, target) pairs."""
    scores = []
    for inp, tgt in pairs:
        out = restore_image(inp, config)
        tgt = np.asarray(tgt, dtype=np.float64)
        if border > 0:
            out = out[border:-border, border:-border]
            tgt = tgt[border:-border, border:-border]
        scores.append(psnr(out, tgt))
    return float(np.mean(scores))


def train(tp: TrainablePipeline, train_pairs, val_pairs,
          cfg: TrainConfig) -> TrainReport:
    """Cosine-scheduled Adam loop with best-checkpoint selection.

    The validation PSNR is measured through the full (quantizing)
    inference path; the parameters giving the best score -- including
    the untouched initialization -- are restored before returning, so a
    fine-tune can never end worse than it started.
    """
    rng = np.random.default_rng(cfg.seed)
    border = tp.scale if tp.task == "sr" else 0
    history, val_history = [], []

    best_snap = tp.snapshot()
    best_psnr = evaluate_pairs(tp.to_config(), val_pairs, border)
    best_step = -1
    val_history.append((-1, best_psnr))

    for step in range(cfg.iterations):
        lr = cosine_lr(step, cfg.iterations, cfg.lr)
        batch = sample_batch(rng, train_pairs, cfg.crop, tp.rs,
                             cfg.batch_size, cfg.augment)
        losses = forward_backward(tp, batch, cfg)
        if not math.isfinite(losses["total"]):
            raise TrainingDivergedError(
                f"non-finite loss at step {step}: {losses}")
        for tl in tp.parameters():
            adam_step(tl.lut.entries, tl.grad, tl.adam, step, lr * tl.lr_factor)
        if tp.pooling == "gmp" and tp.tau_trainable:
            adam_step(tp.log_tau, tp.tau_grad, tp.tau_adam, step,
                      lr * cfg.tau_lr_factor)
        history.append({"step": step, "lr": lr, **losses})

        if (step + 1) % cfg.val_interval == 0 or step + 1 == cfg.iterations:
            score = evaluate_pairs(tp.to_config(), val_pairs, border)
            val_history.append((step, score))
            if score > best_psnr:
                best_psnr = score
                best_snap = tp.snapshot()
                best_step = step

    tp.load_snapshot(best_snap)
    return TrainReport(cfg.iterations, history, val_history, best_step, best_psnr)


def finetune(tp: TrainablePipeline, train_pairs, val_pairs, cfg: TrainConfig,
             pooling: str, coeff_q: int = None, tau_init: float = None):
    """Attach a fusion stage to pretrained tables and train it.

    The restoration tables move at ``cfg.finetune_lr_factor`` of the
    base learning rate.  OAP starts from all-zero logits (exactly plain
    averaging); the soft-median starts at a large temperature (also the
    averaging limit) unless ``tau_init`` says otherwise.  Returns the
    fine-tuned pipeline and its training report.
    """
    if pooling not in ("oap", "gmp"):
        raise ValueError("finetune targets oap or gmp pooling")
    luts = [TrainableLut(tl.lut.copy(), lr_factor=cfg.finetune_lr_factor)
            for tl in tp.luts]
    coeff = None
    if pooling == "oap":
        k = tp.orientations.k
        q = coeff_q if coeff_q is not None else tp.luts[0].lut.q
        n = tp.coeff_pattern.n
        shape = (lattice_size(q),) * n + (k,)
        coeff = TrainableLut(RealLut(q, n, k, np.zeros(shape)))
    ft = TrainablePipeline(
        task=tp.task, scale=tp.scale, luts=luts, patterns=list(tp.patterns),
        orientations=tp.orientations, pooling=pooling, residual=tp.residual,
        norm=tp.norm, coeff=coeff, coeff_pattern=tp.coeff_pattern)
    if pooling == "gmp":
        ft.tau_trainable = True
        tau0 = tau_init if tau_init is not None else 1e4
        ft.log_tau[...] = math.log(tau0)
        ft.tau_adam = AdamState.like(ft.log_tau)
    report = train(ft, train_pairs, val_pairs, cfg)
    return ft, report


def export_pipeline(tp: TrainablePipeline, bit_depth: int = 8):
    """Quantize a trained pipeline for deployment.

    Residual tables go to signed (bias-128) storage, plain tables to
    unsigned.  Coefficient logits become 8-bit weights by scaling the
    per-entry softmax to 0..255 (sum-normalized again at query time).
    Returns the deployable config and a per-table quantization report.
    """
    stages = []
    reports = {}
    for i, tl in enumerate(tp.luts):
        lut, rep = quantize(tl.lut, bit_depth=bit_depth, signed=tp.residual)
        stages.append(lut)
        reports[f"stage0_pattern{i}"] = rep
    coeff = None
    if tp.pooling == "oap" and tp.coeff is not None:
        logits = tp.coeff.lut.entries
        weights = softmax(logits, axis=-1)
        stored = round_half_away(weights * 255.0).astype(np.uint8)
        coeff = CoeffLut(tp.coeff.lut.q, tp.coeff.lut.n, tp.coeff.lut.m,
                         stored, bit_depth=8, signed=False)
    pool = PoolingSpec(kind=tp.pooling, tau=tp.tau, norm=tp.norm,
                       coeff_lut=coeff)
    config = PipelineConfig(
        task=tp.task, scale=tp.scale, patterns=list(tp.patterns),
        orientations=tp.orientations, pooling=pool, residual=tp.residual,
        stages=[stages], coeff_pattern=tp.coeff_pattern)
    return config, reports
