"""Synthetic alignment corpora with known gold structure.

Each chunk is a single made-up token whose vector is drawn at random
(unit norm); an aligned partner chunk reuses that vector plus Gaussian
noise, an unaligned chunk gets a fresh vector. Writing the corpus and
its word-vector table to disk exercises the same loaders as real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Chunk, ChunkedPair, GoldAlignment, Token
from .embed import EmbeddingTable, save_vectors


@dataclass(frozen=True)
class SyntheticSpec:
    pairs: int = 100
    min_chunks: int = 2
    max_chunks: int = 6
    dim: int = 50
    noise: float = 0.1
    mode: str = "identity"  # identity | permutation | unaligned
    unaligned_fraction: float = 0.0

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError("noise scale must be nonnegative")
        if self.min_chunks < 1 or self.max_chunks < self.min_chunks:
            raise ValueError("chunk-count range is empty")
        if self.mode not in ("identity", "permutation", "unaligned"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.unaligned_fraction <= 1.0:
            raise ValueError("unaligned fraction must be in [0, 1]")


def _unit(rng, dim):
    vec = rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def _one_token_chunks(prefix, count):
    tokens = [Token(surface=f"{prefix}{k}", index=k) for k in range(count)]
    chunks = [Chunk(tokens=(tok,), span=(k, k + 1)) for k, tok in enumerate(tokens)]
    return tokens, chunks


def generate(spec, seed=0):
    """Build a corpus plus its embedding table.

    Returns (pairs, table). Gold follows the chosen mode: identity pairs,
    a random permutation, or identity with a random fraction of chunks
    left unaligned on both sides.
    """
    rng = np.random.default_rng(seed)
    entries = {}
    pairs = []
    for p in range(spec.pairs):
        n = int(rng.integers(spec.min_chunks, spec.max_chunks + 1))
        tokens_x, chunks_x = _one_token_chunks(f"p{p}x", n)
        tokens_y, chunks_y = _one_token_chunks(f"p{p}y", n)
        base = np.stack([_unit(rng, spec.dim) for _ in range(n)])
        if spec.mode == "permutation":
            perm = rng.permutation(n)
        else:
            perm = np.arange(n)
        aligned = np.ones(n, dtype=bool)
        if spec.mode == "unaligned":
            aligned = rng.random(n) >= spec.unaligned_fraction
        gold_pairs = set()
        y_vectors = np.zeros_like(base)
        for i in range(n):
            j = int(perm[i])
            if aligned[i]:
                y_vectors[j] = base[i] + spec.noise * rng.normal(size=spec.dim)
                gold_pairs.add((i, j))
            else:
                y_vectors[j] = _unit(rng, spec.dim)
        for k in range(n):
            entries[tokens_x[k].surface] = base[k]
            entries[tokens_y[k].surface] = y_vectors[k]
        pairs.append(
            ChunkedPair(
                id=f"synth-{p}",
                tokens_x=tokens_x,
                tokens_y=tokens_y,
                x=chunks_x,
                y=chunks_y,
                gold=GoldAlignment(pairs=frozenset(gold_pairs), n=n, m=n),
            )
        )
    return pairs, EmbeddingTable(entries, spec.dim)


def generate_attractor(pairs=50, chunks=5, duplicates=3, dim=50, noise=0.02, seed=0):
    """Corpus that stresses one-to-one modelling.

    In every pair, ``duplicates`` of the x chunks share (up to tiny
    noise) a single vector, whose y partner carries it too; gold is
    still the identity. A model that scores rows independently is free
    to point all the near-identical x chunks at the same y chunk, while
    a bidirectional one has to spread them out.
    """
    rng = np.random.default_rng(seed)
    entries = {}
    out = []
    for p in range(pairs):
        n = chunks
        tokens_x, chunks_x = _one_token_chunks(f"p{p}x", n)
        tokens_y, chunks_y = _one_token_chunks(f"p{p}y", n)
        base = np.stack([_unit(rng, dim) for _ in range(n)])
        dup = rng.choice(n, size=min(duplicates, n), replace=False)
        shared = _unit(rng, dim)
        for i in dup:
            base[i] = shared + noise * rng.normal(size=dim)
        y_vectors = base + noise * rng.normal(size=(n, dim))
        for k in range(n):
            entries[tokens_x[k].surface] = base[k]
            entries[tokens_y[k].surface] = y_vectors[k]
        out.append(
            ChunkedPair(
                id=f"attract-{p}",
                tokens_x=tokens_x,
                tokens_y=tokens_y,
                x=chunks_x,
                y=chunks_y,
                gold=GoldAlignment(pairs=frozenset((i, i) for i in range(n)), n=n, m=n),
            )
        )
    return out, EmbeddingTable(entries, dim)


def write(spec, seed, corpus_path, vectors_path):
    """Generate and persist a corpus in the canonical format plus a
    word-vector text file, so the full file-based pipeline can run."""
    from .corpus import save_canonical

    pairs, table = generate(spec, seed)
    save_canonical(pairs, corpus_path)
    save_vectors({surface: table.lookup(surface) for surface in _surfaces(pairs)}, vectors_path)
    return pairs, table


def _surfaces(pairs):
    for pair in pairs:
        for tok in pair.tokens_x + pair.tokens_y:
            yield tok.surface
