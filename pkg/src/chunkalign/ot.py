"""Bidirectional alignment via entropy-regularized optimal transport.

The gated pointer scores become a nonnegative cost matrix over the
(n+1) x (m+1) grid of chunk pairs (the extra row and column are the
"not aligned" cells). A fixed number of alternating row and column
normalization sweeps of the Gibbs kernel yields a transport plan whose
real rows and columns are (approximately) probability distributions.
The sweep count is fixed, not residual-based, so the computation is a
static graph that reverse mode can differentiate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class SinkhornError(ValueError):
    pass


@dataclass(frozen=True)
class SinkhornConfig:
    """Entropy strength, kernel stabilizer, and fixed sweep count.

    epsilon_mode "kernel" adds epsilon after exponentiation (default);
    "cost" adds it to every cost entry beforehand. Both guard against
    all-zero kernel rows.
    """

    lam: float = 0.6
    epsilon: float = 1e-8
    iterations: int = 20
    epsilon_mode: str = "kernel"

    def __post_init__(self):
        if self.lam <= 0:
            raise SinkhornError("entropy regularization strength must be positive")
        if self.epsilon <= 0:
            raise SinkhornError("epsilon must be positive")
        if self.iterations < 1:
            raise SinkhornError("iteration count must be at least 1")
        if self.epsilon_mode not in ("kernel", "cost"):
            raise SinkhornError(f"unknown epsilon_mode {self.epsilon_mode!r}")


@dataclass(frozen=True)
class CostMatrix:
    """Row-shifted nonnegative costs; index n is the phi row, index m the
    phi column."""

    c: np.ndarray
    n: int
    m: int


@dataclass(frozen=True)
class TransportPlan:
    """Normalized alignment probabilities plus convergence diagnostics."""

    p: np.ndarray
    n: int
    m: int
    row_residual: float
    col_residual: float
    entropy: float

    @property
    def inner(self):
        return self.p[: self.n, : self.m]

    @property
    def p_x_phi(self):
        return self.p[: self.n, self.m]

    @property
    def p_y_phi(self):
        return self.p[self.n, : self.m]


def build_cost_graph(sg, g_x, g_y):
    """Cost tensor from a score graph and gates.

    Real cells cost -g_x[i] g_y[j] theta[i,j]; the phi column costs
    -(1 - g_x[i]) and the phi row -(1 - g_y[j]). Each row is then
    shifted by its own minimum so all entries are nonnegative. The
    (phi, phi) corner is a placeholder; its kernel entry is zeroed.
    """
    theta = sg.theta_used
    n, m = theta.shape
    inner = -(ad.reshape(g_x, (n, 1)) * ad.reshape(g_y, (1, m)) * theta)
    x_phi = ad.reshape(g_x, (n, 1)) - 1.0
    y_phi = ad.reshape(g_y, (1, m)) - 1.0
    top = ad.concat([inner, x_phi], axis=1)
    bottom = ad.concat([y_phi, Tensor(np.zeros((1, 1)))], axis=1)
    cost = ad.concat([top, bottom], axis=0)
    return cost - ad.tmin(cost, axis=1, keepdims=True)


def build_cost(scores, gate_vectors):
    """Array-level cost construction from a ScoreMatrix and GateVectors."""
    from .net import ScoreGraph

    sg = ScoreGraph(
        theta=Tensor(scores.theta),
        b_x_phi=Tensor(scores.b_x_phi),
        b_y_phi=Tensor(scores.b_y_phi),
        theta_prime=None if scores.theta_prime is None else Tensor(scores.theta_prime),
    )
    n, m = scores.theta_used.shape
    cost = build_cost_graph(sg, Tensor(gate_vectors.g_x), Tensor(gate_vectors.g_y))
    return CostMatrix(c=cost.value, n=n, m=m)


def _masks(n, m):
    row_mask = np.zeros((n + 1, 1))
    row_mask[:n] = 1.0
    col_mask = np.zeros((1, m + 1))
    col_mask[:, :m] = 1.0
    corner = np.ones((n + 1, m + 1))
    corner[n, m] = 0.0
    return row_mask, col_mask, corner


def sinkhorn_graph(cost, n, m, cfg):
    """Differentiable scaling sweeps on the kernel of a cost tensor.

    Kernel k = exp(-c / lam) (+ epsilon per cfg), corner zeroed. Each of
    the cfg.iterations sweeps normalizes rows 0..n-1 to sum one, then
    columns 0..m-1. The phi row and column are rescaled by those passes
    but never normalized themselves, so they absorb the slack that makes
    unequal sentence lengths feasible.
    """
    row_mask, col_mask, corner = _masks(n, m)
    if cfg.epsilon_mode == "cost":
        kernel = ad.exp((cost + cfg.epsilon) * (-1.0 / cfg.lam)) * corner
    else:
        kernel = (ad.exp(cost * (-1.0 / cfg.lam)) + cfg.epsilon) * corner
    _check_kernel(kernel.value, n, m, cfg)
    plan = kernel
    for _ in range(cfg.iterations):
        row_sums = ad.tsum(plan, axis=1, keepdims=True)
        plan = plan / (row_sums * row_mask + (1.0 - row_mask))
        col_sums = ad.tsum(plan, axis=0, keepdims=True)
        plan = plan / (col_sums * col_mask + (1.0 - col_mask))
    return plan


def _check_kernel(kernel, n, m, cfg):
    if not np.all(np.isfinite(kernel)):
        raise SinkhornError(
            "non-finite kernel entry; rescale the costs or increase the entropy strength lam"
        )
    if np.any(kernel[:n].sum(axis=1) <= 0) or np.any(kernel[:, :m].sum(axis=0) <= 0):
        raise SinkhornError(
            "kernel has an all-zero row or column; increase epsilon or the entropy strength lam"
        )


def _as_cost_array(cost):
    if isinstance(cost, CostMatrix):
        return np.asarray(cost.c, dtype=np.float64), cost.n, cost.m
    c = np.asarray(cost, dtype=np.float64)
    return c, c.shape[0] - 1, c.shape[1] - 1


def plan_diagnostics(p, n, m):
    row_residual = float(np.abs(p[:n].sum(axis=1) - 1.0).max()) if n else 0.0
    col_residual = float(np.abs(p[:, :m].sum(axis=0) - 1.0).max()) if m else 0.0
    positive = p[p > 0]
    entropy = float(-(positive * np.log(positive)).sum())
    return row_residual, col_residual, entropy


def sinkhorn(cost, cfg=SinkhornConfig()):
    """Transport plan for a nonnegative cost matrix.

    ``cost`` is a CostMatrix or a raw (n+1) x (m+1) array whose last row
    and column are the phi cells.
    """
    c, n, m = _as_cost_array(cost)
    if not np.all(np.isfinite(c)):
        raise SinkhornError("non-finite cost entry; rescale the costs or increase the entropy strength lam")
    if np.any(c < 0):
        raise SinkhornError("cost matrix must be nonnegative (row-shift it first)")
    plan = sinkhorn_graph(Tensor(c), n, m, cfg)
    row_residual, col_residual, entropy = plan_diagnostics(plan.value, n, m)
    return TransportPlan(
        p=plan.value,
        n=n,
        m=m,
        row_residual=row_residual,
        col_residual=col_residual,
        entropy=entropy,
    )


def sinkhorn_backward(cost, cfg, upstream):
    """Gradient of the plan w.r.t. every cost entry.

    Replays the forward sweeps on a fresh tape and reverse-propagates
    ``upstream`` (dLoss/dPlan, same shape as the plan) through them,
    giving the exact gradient of the unrolled computation.
    """
    c, n, m = _as_cost_array(cost)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != c.shape:
        raise ValueError(f"upstream shape {upstream.shape} != plan shape {c.shape}")
    leaf = Tensor(c)
    plan = sinkhorn_graph(leaf, n, m, cfg)
    plan.backward(upstream)
    return np.zeros_like(c) if leaf.grad is None else leaf.grad
