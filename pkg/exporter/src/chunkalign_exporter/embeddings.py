"""Contextual word-vector backends.

The transformers backend encodes each pre-tokenized sentence, sums the
last four hidden layers, and averages the pieces belonging to each word,
giving one 768-vector per token. The hash backend is a deterministic
offline stand-in with the same shape contract, for fixtures and tests in
environments without model weights.
"""

from __future__ import annotations

import hashlib

import numpy as np

HASH_DIM = 768


class WordAlignmentError(ValueError):
    """Sub-word pieces could not be aligned back to the given tokens."""


def pool_word_vectors(piece_vectors, word_ids, n_words):
    """Average piece vectors per word.

    ``word_ids`` maps each piece to its word index (None for special
    tokens). A word whose pieces all vanished under tokenizer
    normalization inherits the vector of the nearest preceding piece
    (the following one when it is the very first word).
    """
    piece_vectors = np.asarray(piece_vectors, dtype=np.float64)
    groups = [[] for _ in range(n_words)]
    last_piece_before = [None] * n_words
    for k, wid in enumerate(word_ids):
        if wid is None:
            continue
        if wid >= n_words:
            raise WordAlignmentError(f"piece {k} maps to word {wid}, sentence has {n_words} tokens")
        groups[wid].append(k)
        for w in range(wid + 1, n_words):
            last_piece_before[w] = k
    vectors = np.zeros((n_words, piece_vectors.shape[1]))
    for w, pieces in enumerate(groups):
        if pieces:
            vectors[w] = piece_vectors[pieces].mean(axis=0)
        elif last_piece_before[w] is not None:
            vectors[w] = piece_vectors[last_piece_before[w]]
        else:
            following = next((piece for group in groups[w + 1:] for piece in group), None)
            if following is None:
                raise WordAlignmentError(f"word {w} has no pieces and no neighbors to borrow from")
            vectors[w] = piece_vectors[following]
    return vectors


def hash_vectors(surfaces, dim=HASH_DIM):
    """Deterministic pseudo-contextual vectors keyed by surface form."""
    out = np.zeros((len(surfaces), dim))
    for k, surface in enumerate(surfaces):
        digest = hashlib.sha256(surface.lower().encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vec = rng.standard_normal(dim)
        out[k] = vec / np.linalg.norm(vec)
    return out


class TransformerBackend:
    """Sum-of-last-4-layers word vectors from a pretrained encoder."""

    def __init__(self, model_name):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name, output_hidden_states=True)
        self.model.eval()
        self.name = model_name

    @property
    def dim(self):
        return int(self.model.config.hidden_size)

    def encode(self, surfaces):
        encoding = self.tokenizer(
            list(surfaces), is_split_into_words=True, return_tensors="pt", truncation=True
        )
        with self._torch.no_grad():
            output = self.model(**encoding)
        summed = sum(output.hidden_states[-4:])[0]  # (pieces, hidden)
        word_ids = encoding.word_ids(0)
        return pool_word_vectors(summed.numpy(), word_ids, len(surfaces))


def load_embedder(name):
    """Resolve a backend name to (encode callable, dim, provenance)."""
    if name == "hash768":
        return (lambda surfaces: hash_vectors(surfaces)), HASH_DIM, "hash768-sha256-v1"
    backend = TransformerBackend(name)
    return backend.encode, backend.dim, name
