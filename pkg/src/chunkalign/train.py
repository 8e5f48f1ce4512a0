"""Training: loss functions, exact gradients through the whole pipeline,
the optimization loop with early stopping, and the hyperparameter grid.

One sentence pair per optimizer step (chunk counts vary, padding buys
nothing at this scale). Gradients come from the autodiff tape, including
through the unrolled transport sweeps; rule firings are constants, so no
gradient flows through the score shift.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import net
from .autodiff import Tensor
from .embed import pair_chunk_vectors
from .evaluate import decode, evaluate_corpus
from .ot import SinkhornConfig, TransportPlan, build_cost_graph, plan_diagnostics, sinkhorn_graph
from .rules import SynSimConfig, build_constraints

PROB_FLOOR = 1e-12

# preset -> (chunk representation, bidirectional?, constraints?)
PRESETS = {
    "M1": ("mean", False, False),
    "M2": ("mean", True, False),
    "M3": ("boundary", True, False),
    "M4": ("boundary", True, True),
}

RHO_GRID = (0.0, 1.0, 2.0, 4.0)
DIM_GRID = (100, 150, 200, 768)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class LossConfig:
    c1_weight: float = 1.0
    c2_weight: float = 1.0
    mode: str = "bidirectional"

    def __post_init__(self):
        if self.c1_weight <= 0 or self.c2_weight <= 0:
            raise ConfigurationError("loss weights must be positive")
        if self.mode not in ("unidirectional", "bidirectional"):
            raise ConfigurationError(f"unknown loss mode {self.mode!r}")


@dataclass(frozen=True)
class TrainConfig:
    model_preset: str = "M2"
    learning_rate: float = 1e-3
    max_epochs: int = 200
    patience: int = 5
    seed: int = 0
    proj_dim: int = 100
    rho: float = 0.0
    tau: float = 0.8
    c1_weight: float = 1.0
    c2_weight: float = 1.0
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    mutual_decode: bool = False

    def __post_init__(self):
        if self.model_preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.model_preset!r}")
        if self.patience < 1:
            raise ConfigurationError("patience must be at least 1")
        if self.proj_dim < 1:
            raise ConfigurationError("projection dimension must be positive")
        if self.rho < 0:
            raise ConfigurationError("rule strength rho must be nonnegative")

    @property
    def embedding_mode(self):
        return PRESETS[self.model_preset][0]

    @property
    def bidirectional(self):
        return PRESETS[self.model_preset][1]

    @property
    def constrained(self):
        return PRESETS[self.model_preset][2]


# ---------------------------------------------------------------------------
# Losses


def _loss_unidirectional_graph(rows, p_phi_cols, gold, cfg):
    n, m = rows.shape[0], rows.shape[1] - 1
    a, a_x_phi, a_y_phi = gold.matrix()
    mask = np.concatenate([a, a_x_phi[:, None]], axis=1)
    log_rows = ad.log(ad.clamp_min(rows, PROB_FLOOR))
    pointer_term = ad.tsum(log_rows * mask) * (-cfg.c1_weight / n)
    log_p = ad.log(ad.clamp_min(p_phi_cols, PROB_FLOOR))
    log_not_p = ad.log(ad.clamp_min(1.0 - p_phi_cols, PROB_FLOOR))
    bce = -ad.tsum(log_p * a_y_phi + log_not_p * (1.0 - a_y_phi))
    return pointer_term + cfg.c2_weight * bce


def loss_unidirectional(p_rows, p_phi_cols, gold, cfg=LossConfig(mode="unidirectional")):
    """Pointer cross-entropy over rows plus binary cross-entropy on the
    y-side phi probabilities, weighted by (c1_weight, c2_weight)."""
    loss = _loss_unidirectional_graph(Tensor(p_rows), Tensor(p_phi_cols), gold, cfg)
    return float(loss.value)


def _loss_bidirectional_graph(plan, gold):
    a, a_x_phi, a_y_phi = gold.matrix()
    n, m = a.shape
    weights = np.zeros((n + 1, m + 1))
    weights[:n, :m] = 2.0 * a
    weights[:n, m] = a_x_phi
    weights[n, :m] = a_y_phi
    log_plan = ad.log(ad.clamp_min(plan, PROB_FLOOR))
    return -ad.tsum(log_plan * weights)


def loss_bidirectional(plan, gold):
    """Cross-entropy on the transport plan: gold real cells count twice
    (once per direction), gold phi cells once per side."""
    p = plan.p if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    loss = _loss_bidirectional_graph(Tensor(p), gold)
    return float(loss.value)


# ---------------------------------------------------------------------------
# Forward graph for one pair


def pair_loss_graph(leaves, X, Y, gold, cfg, shift=None):
    """Loss tensor for one pair under a TrainConfig (gradient-ready)."""
    sg = net.build_scores(leaves, X, Y, shift=shift)
    g_x, g_y = net.build_gates(sg, leaves)
    loss_cfg = LossConfig(
        c1_weight=cfg.c1_weight,
        c2_weight=cfg.c2_weight,
        mode="bidirectional" if cfg.bidirectional else "unidirectional",
    )
    if cfg.bidirectional:
        cost = build_cost_graph(sg, g_x, g_y)
        plan = sinkhorn_graph(cost, X.shape[0], Y.shape[0], cfg.sinkhorn)
        return _loss_bidirectional_graph(plan, gold)
    rows = net.build_unidirectional_rows(sg, g_x, g_y)
    return _loss_unidirectional_graph(rows, 1.0 - g_y, gold, loss_cfg)


def forward_pair(params, X, Y, cfg, shift=None):
    """Probability grid for decoding one pair (no gradients kept)."""
    leaves = params.leaves()
    sg = net.build_scores(leaves, X, Y, shift=shift)
    g_x, g_y = net.build_gates(sg, leaves)
    n, m = X.shape[0], Y.shape[0]
    if cfg.bidirectional:
        cost = build_cost_graph(sg, g_x, g_y)
        plan = sinkhorn_graph(cost, n, m, cfg.sinkhorn).value
        row_res, col_res, entropy = plan_diagnostics(plan, n, m)
        return TransportPlan(
            p=plan, n=n, m=m, row_residual=row_res, col_residual=col_res, entropy=entropy
        )
    rows = net.build_unidirectional_rows(sg, g_x, g_y).value
    grid = np.zeros((n + 1, m + 1))
    grid[:n, :] = rows
    grid[n, :m] = 1.0 - g_y.value
    return grid


def gradients(params, batch, cfg):
    """Mean gradient over a batch of (X, Y, gold, shift) tuples.

    Returns ({name: gradient array}, mean loss). Raises on non-finite
    gradients, naming the parameter group.
    """
    total = {name: np.zeros_like(value) for name, value in params.arrays()}
    total_loss = 0.0
    for X, Y, gold, shift in batch:
        leaves = params.leaves()
        loss = pair_loss_graph(leaves, X, Y, gold, cfg, shift=shift)
        loss.backward()
        total_loss += float(loss.value)
        for name, leaf in leaves.items():
            if leaf.grad is not None:
                total[name] += leaf.grad
    scale = 1.0 / len(batch)
    for name in total:
        total[name] *= scale
        if not np.all(np.isfinite(total[name])):
            raise FloatingPointError(f"non-finite gradient in parameter group {name}")
    return total, total_loss * scale


@dataclass(frozen=True)
class GradientReport:
    """Per-parameter-group agreement between reverse-mode gradients and
    central finite differences, in 64-bit arithmetic."""

    max_relative_error: dict
    tolerance: float

    @property
    def passed(self):
        return all(err <= self.tolerance for err in self.max_relative_error.values())

    @property
    def worst(self):
        return max(self.max_relative_error.values())


def gradient_check(params, batch, cfg, h=1e-5, tolerance=1e-4):
    """Compare gradients() against central differences on every group.

    A diagnostic for configuration changes (new losses, different sweep
    counts); the test suite keeps its own independent difference oracle.
    """
    grads, _ = gradients(params, batch, cfg)

    def loss_at(probe):
        total = 0.0
        for X, Y, gold, shift in batch:
            total += float(pair_loss_graph(probe.leaves(), X, Y, gold, cfg, shift=shift).value)
        return total / len(batch)

    errors = {}
    for name, arr in params.arrays():
        numeric = np.zeros_like(arr)
        for idx in np.ndindex(*arr.shape) if arr.ndim else [()]:
            probe = params.copy()
            if arr.ndim:
                getattr(probe, name)[idx] += h
                up = loss_at(probe)
                getattr(probe, name)[idx] -= 2 * h
                down = loss_at(probe)
            else:
                setattr(probe, name, getattr(probe, name) + h)
                up = loss_at(probe)
                setattr(probe, name, getattr(probe, name) - 2 * h)
                down = loss_at(probe)
            numeric[idx] = (up - down) / (2 * h)
        rel = np.abs(grads[name] - numeric) / np.maximum(np.abs(numeric), 1e-8)
        errors[name] = float(rel.max())
    return GradientReport(max_relative_error=errors, tolerance=tolerance)


class Adam:
    """Adaptive moment estimation, the conventional defaults."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        self.step_count += 1
        t = self.step_count
        updated = {}
        for name, value in params.arrays():
            g = grads[name]
            m = self._m.get(name, np.zeros_like(value))
            v = self._v.get(name, np.zeros_like(value))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self._m[name] = m
            self._v[name] = v
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return net.PointerParams(
            W1=updated["W1"],
            W2=updated["W2"],
            W3=updated["W3"],
            v=updated["v"],
            phi=updated["phi"],
            c1=float(updated["c1"]),
            c2=float(updated["c2"]),
            d1=float(updated["d1"]),
            d2=float(updated["d2"]),
        )


# ---------------------------------------------------------------------------
# Fitting


def prepare_pair_inputs(corpus, cfg, table=None, annotations=None, lexicon=None):
    """Resolve chunk vectors and rule firings for every pair up front.

    Returns a list of (X, Y, gold, shift) tuples. Raises
    ConfigurationError when the preset needs resources that are missing.
    """
    mode = cfg.embedding_mode
    if mode == "mean" and table is None:
        raise ConfigurationError(f"preset {cfg.model_preset} needs a word-vector table")
    if mode == "boundary" and annotations is None:
        raise ConfigurationError(
            f"preset {cfg.model_preset} needs a contextual annotation file"
        )
    syn_cfg = SynSimConfig(tau=cfg.tau)
    batch = []
    for pair in corpus:
        X, Y = pair_chunk_vectors(pair, mode, table=table, annotations=annotations)
        shift = None
        if cfg.constrained and cfg.rho > 0:
            constraints = build_constraints(pair, lexicon, syn_cfg, rho=cfg.rho)
            shift = constraints.shift
        batch.append((X, Y, pair.gold, shift))
    return batch


def corpus_f1(params, batch, corpus, cfg):
    """Decode every pair with the current parameters and score micro F1."""
    predictions = []
    for X, Y, _, shift in batch:
        probs = forward_pair(params, X, Y, cfg, shift=shift)
        if cfg.bidirectional:
            predictions.append(decode(probs, mutual=cfg.mutual_decode))
        else:
            grid = probs
            n, m = X.shape[0], Y.shape[0]
            rows = grid[:n, :]
            gate_like = _GateView(g_y=1.0 - grid[n, :m])
            predictions.append(decode(rows, gate_like, mutual=cfg.mutual_decode))
    return evaluate_corpus(predictions, corpus)


@dataclass(frozen=True)
class _GateView:
    g_y: np.ndarray


def fit(corpus, cfg, table=None, annotations=None, lexicon=None, log_hook=None):
    """Train on a corpus with gold alignments.

    Adam steps one pair at a time in a seeded shuffled order. After each
    epoch the training-set F1 is computed; training stops at max_epochs
    or once F1 has failed to improve for ``patience`` successive epochs,
    and the parameters of the best-F1 epoch are returned together with
    the per-epoch log.
    """
    if not corpus:
        raise ConfigurationError("training corpus is empty")
    for pair in corpus:
        if pair.gold is None:
            raise ConfigurationError(f"pair {pair.id!r} has no gold alignment")
    batch = prepare_pair_inputs(corpus, cfg, table=table, annotations=annotations, lexicon=lexicon)
    embed_dim = batch[0][0].shape[1]
    params = net.PointerParams.init(embed_dim, cfg.proj_dim, seed=cfg.seed)
    optimizer = Adam(lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)

    best_params = params.copy()
    best_f1 = -1.0
    wait = 0
    log = []
    start = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(batch))
        epoch_loss = 0.0
        for k in order:
            grads, loss = gradients(params, [batch[k]], cfg)
            params = optimizer.step(params, grads)
            epoch_loss += loss
        report = corpus_f1(params, batch, corpus, cfg)
        entry = {
            "epoch": epoch,
            "loss": epoch_loss / len(batch),
            "train_f1": report.f1,
            "wall_time": time.perf_counter() - start,
        }
        log.append(entry)
        if log_hook is not None:
            log_hook(entry)
        if report.f1 > best_f1:
            best_f1 = report.f1
            best_params = params.copy()
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return best_params, log


def grid_search(corpus, cfg, rho_grid=RHO_GRID, dim_grid=DIM_GRID, table=None, annotations=None, lexicon=None):
    """Train one model per (rho, d) grid point and rank by training F1.

    d = 768 only makes sense for contextual chunk representations; grid
    points pairing it with a mean-pooling preset are skipped with a
    warning entry. Returns (results, best) where each result carries the
    final training F1 of its run.
    """
    if not rho_grid or not dim_grid:
        raise ConfigurationError("hyperparameter grid is empty")
    results = []
    best = None
    for rho in rho_grid:
        for dim in dim_grid:
            if dim == 768 and cfg.embedding_mode == "mean":
                results.append(
                    {"rho": rho, "proj_dim": dim, "skipped": True,
                     "reason": "d=768 is reserved for contextual chunk representations"}
                )
                continue
            run_cfg = replace(cfg, rho=float(rho), proj_dim=int(dim))
            params, log = fit(
                corpus, run_cfg, table=table, annotations=annotations, lexicon=lexicon
            )
            entry = {
                "rho": float(rho),
                "proj_dim": int(dim),
                "skipped": False,
                "train_f1": log[-1]["train_f1"] if log else 0.0,
                "best_f1": max(item["train_f1"] for item in log),
                "epochs": len(log),
            }
            results.append(entry)
            if best is None or entry["best_f1"] > best[0]["best_f1"]:
                best = (entry, params)
    if best is None:
        raise ConfigurationError("every grid point was skipped; check preset and dim grid")
    return results, best
