"""Gated pointer network scoring.

Pairwise alignment strengths between chunks of the two sentences, scores
against the learned "not aligned" chunk, sigmoid gates deciding whether a
chunk has a real counterpart, and the row-softmax unidirectional model.

All forward math is built from autodiff Tensors so the training code can
reuse exactly the same computation with gradients; the public functions
run the same graph on constant leaves and return plain arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

CHECKPOINT_VERSION = 1

PARAM_NAMES = ("W1", "W2", "W3", "v", "phi", "c1", "c2", "d1", "d2")


@dataclass
class PointerParams:
    """Learnable parameters of the scoring and gating model.

    W1, W2, W3 project chunk vectors of length E down to dimension d; v
    turns the tanh activations into scalars; phi is the learned
    representation of the "not aligned" chunk; c1, c2 and d1, d2 shape
    the two gating sigmoids.
    """

    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    c1: float
    c2: float
    d1: float
    d2: float

    @property
    def proj_dim(self):
        return self.W1.shape[0]

    @property
    def embed_dim(self):
        return self.W1.shape[1]

    @classmethod
    def init(cls, embed_dim, proj_dim, seed=0):
        """Uniform init scaled by 1/sqrt(E) for W and v; phi starts at zero
        and the gate parameters at (1, 0) so gates begin at 0.5."""
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(embed_dim)
        draw = lambda *shape: rng.uniform(-bound, bound, size=shape)
        return cls(
            W1=draw(proj_dim, embed_dim),
            W2=draw(proj_dim, embed_dim),
            W3=draw(proj_dim, embed_dim),
            v=draw(proj_dim),
            phi=np.zeros(embed_dim),
            c1=1.0,
            c2=0.0,
            d1=1.0,
            d2=0.0,
        )

    def arrays(self):
        """(name, ndarray) view of every parameter group, scalars included."""
        return [
            ("W1", self.W1),
            ("W2", self.W2),
            ("W3", self.W3),
            ("v", self.v),
            ("phi", self.phi),
            ("c1", np.asarray(self.c1)),
            ("c2", np.asarray(self.c2)),
            ("d1", np.asarray(self.d1)),
            ("d2", np.asarray(self.d2)),
        ]

    def leaves(self):
        """Fresh gradient leaves for one forward/backward pass."""
        return {name: Tensor(value) for name, value in self.arrays()}

    def copy(self):
        return PointerParams(
            W1=self.W1.copy(),
            W2=self.W2.copy(),
            W3=self.W3.copy(),
            v=self.v.copy(),
            phi=self.phi.copy(),
            c1=float(self.c1),
            c2=float(self.c2),
            d1=float(self.d1),
            d2=float(self.d2),
        )

    def save(self, path, meta=None):
        header = {"version": CHECKPOINT_VERSION, "proj_dim": self.proj_dim, "embed_dim": self.embed_dim}
        if meta:
            header.update(meta)
        np.savez(
            path,
            __header__=np.bytes_(json.dumps(header, sort_keys=True).encode("utf-8")),
            W1=self.W1,
            W2=self.W2,
            W3=self.W3,
            v=self.v,
            phi=self.phi,
            scalars=np.array([self.c1, self.c2, self.d1, self.d2]),
        )

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            header = json.loads(bytes(data["__header__"]).decode("utf-8"))
            if header.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")
            scalars = data["scalars"]
            params = cls(
                W1=data["W1"],
                W2=data["W2"],
                W3=data["W3"],
                v=data["v"],
                phi=data["phi"],
                c1=float(scalars[0]),
                c2=float(scalars[1]),
                d1=float(scalars[2]),
                d2=float(scalars[3]),
            )
        return params, header


@dataclass
class ScoreMatrix:
    """Alignment strengths: theta (n, m), phi scores for both sides, and
    the constraint-shifted theta_prime when rules are active."""

    theta: np.ndarray
    b_x_phi: np.ndarray
    b_y_phi: np.ndarray
    theta_prime: np.ndarray | None = None

    @property
    def theta_used(self):
        return self.theta if self.theta_prime is None else self.theta_prime


@dataclass(frozen=True)
class GateVectors:
    g_x: np.ndarray
    g_y: np.ndarray


@dataclass
class ScoreGraph:
    """Tensor-valued twin of ScoreMatrix used during training."""

    theta: Tensor
    b_x_phi: Tensor
    b_y_phi: Tensor
    theta_prime: Tensor | None = None

    @property
    def theta_used(self):
        return self.theta if self.theta_prime is None else self.theta_prime


def _stack(vectors):
    if isinstance(vectors, (list, tuple)) and vectors and hasattr(vectors[0], "values"):
        return np.stack([cv.values for cv in vectors])
    return np.asarray(vectors, dtype=np.float64)


def _check_inputs(X, Y, embed_dim):
    X, Y = _stack(X), _stack(Y)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("chunk vectors must be 2-d arrays (chunks, features)")
    if X.shape[1] != embed_dim or Y.shape[1] != embed_dim:
        raise ValueError(
            f"chunk vector length ({X.shape[1]}, {Y.shape[1]}) does not match parameters ({embed_dim})"
        )
    return X, Y


def build_scores(leaves, X, Y, shift=None):
    """Score graph for one pair.

    theta[i, j] = v . tanh(W1 x_i + W2 y_j + W3 (x_i * y_j)), with the
    phi scores b_x_phi[i] = v . tanh(W1 x_i + W2 phi) and b_y_phi[j] =
    v . tanh(W1 phi + W2 y_j). ``shift`` is an optional constant (n, m)
    matrix (rule strength times rule firings) added on top of theta.
    """
    n, m = X.shape[0], Y.shape[0]
    d = leaves["v"].shape[0]
    W1T = ad.transpose(leaves["W1"])
    W2T = ad.transpose(leaves["W2"])
    A = ad.matmul(Tensor(X), W1T)  # (n, d)
    B = ad.matmul(Tensor(Y), W2T)  # (m, d)
    prod = (X[:, None, :] * Y[None, :, :]).reshape(n * m, X.shape[1])  # constant
    C3 = ad.reshape(ad.matmul(Tensor(prod), ad.transpose(leaves["W3"])), (n, m, d))
    H = ad.tanh(ad.reshape(A, (n, 1, d)) + ad.reshape(B, (1, m, d)) + C3)
    theta = ad.reshape(ad.matmul(ad.reshape(H, (n * m, d)), leaves["v"]), (n, m))

    w2phi = ad.matmul(leaves["W2"], leaves["phi"])  # (d,)
    b_x = ad.matmul(ad.tanh(A + ad.reshape(w2phi, (1, d))), leaves["v"])  # (n,)
    w1phi = ad.matmul(leaves["W1"], leaves["phi"])
    b_y = ad.matmul(ad.tanh(B + ad.reshape(w1phi, (1, d))), leaves["v"])  # (m,)

    theta_prime = None if shift is None else theta + Tensor(shift)
    return ScoreGraph(theta=theta, b_x_phi=b_x, b_y_phi=b_y, theta_prime=theta_prime)


def build_gates(sg, leaves):
    """Gate graph: g_x[i] = sigmoid(c1 max_j(theta[i,j] - b_x_phi[i]) + c2)
    and g_y[j] = sigmoid(d1 max_i(theta[i,j] - b_y_phi[j]) + d2).

    Uses theta_prime when constraints are active; the phi scores never
    receive the rule shift (rules cannot fire on the phi chunk).
    """
    theta = sg.theta_used
    n, m = theta.shape
    over_x = theta - ad.reshape(sg.b_x_phi, (n, 1))
    g_x = ad.sigmoid(leaves["c1"] * ad.tmax(over_x, axis=1) + leaves["c2"])
    over_y = theta - ad.reshape(sg.b_y_phi, (1, m))
    g_y = ad.sigmoid(leaves["d1"] * ad.tmax(over_y, axis=0) + leaves["d2"])
    return g_x, g_y


def build_unidirectional_rows(sg, g_x, g_y):
    """Row distributions of the one-directional model.

    Row i is softmax([g_x[i] g_y[1] theta[i,1], ..., g_x[i] g_y[m]
    theta[i,m], 1 - g_x[i]]) over the m real cells plus the phi cell.
    """
    theta = sg.theta_used
    n, m = theta.shape
    inner = ad.reshape(g_x, (n, 1)) * ad.reshape(g_y, (1, m)) * theta
    tail = ad.reshape(1.0 - g_x, (n, 1))
    z = ad.concat([inner, tail], axis=1)
    z_max = z.value.max(axis=1, keepdims=True)  # detached; softmax is shift-invariant
    e = ad.exp(z - z_max)
    return e / ad.tsum(e, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Public array-in, array-out wrappers. These run the same graph builders
# on constant leaves, so values agree bit for bit with the training path.


def score_matrix(xs, ys, params, shift=None):
    """Alignment strengths for all chunk pairs plus both phi score vectors."""
    X, Y = _check_inputs(xs, ys, params.embed_dim)
    sg = build_scores(params.leaves(), X, Y, shift=shift)
    return ScoreMatrix(
        theta=sg.theta.value,
        b_x_phi=sg.b_x_phi.value,
        b_y_phi=sg.b_y_phi.value,
        theta_prime=None if sg.theta_prime is None else sg.theta_prime.value,
    )


def gates(scores, params):
    """Alignment gates for both sentences, from an existing ScoreMatrix."""
    sg = ScoreGraph(
        theta=Tensor(scores.theta),
        b_x_phi=Tensor(scores.b_x_phi),
        b_y_phi=Tensor(scores.b_y_phi),
        theta_prime=None if scores.theta_prime is None else Tensor(scores.theta_prime),
    )
    leaves = {name: Tensor(np.asarray(val)) for name, val in
              (("c1", params.c1), ("c2", params.c2), ("d1", params.d1), ("d2", params.d2))}
    g_x, g_y = build_gates(sg, leaves)
    return GateVectors(g_x=g_x.value, g_y=g_y.value)


@dataclass(frozen=True)
class UnidirectionalOutput:
    rows: np.ndarray        # (n, m+1); column m is the phi cell
    p_phi_cols: np.ndarray  # (m,); probability that chunk j of y is unaligned


def forward_unidirectional(scores, gate_vectors):
    """Row-wise alignment distributions plus the y-side non-alignment
    probabilities p(z_phi,j) = 1 - g_y[j]."""
    sg = ScoreGraph(
        theta=Tensor(scores.theta),
        b_x_phi=Tensor(scores.b_x_phi),
        b_y_phi=Tensor(scores.b_y_phi),
        theta_prime=None if scores.theta_prime is None else Tensor(scores.theta_prime),
    )
    rows = build_unidirectional_rows(sg, Tensor(gate_vectors.g_x), Tensor(gate_vectors.g_y))
    return UnidirectionalOutput(rows=rows.value, p_phi_cols=1.0 - gate_vectors.g_y)
