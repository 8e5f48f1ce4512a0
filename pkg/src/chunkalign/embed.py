"""Fixed-size chunk representations.

Two modes: mean pooling over a static word-vector table, and boundary
concatenation (first and last word) of precomputed contextual per-token
vectors loaded from an annotation file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class VectorFormatError(ValueError):
    pass


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkVector:
    values: np.ndarray
    mode: str  # "mean" or "boundary"


class EmbeddingTable:
    """Immutable surface-form to vector map with an unknown-word fallback.

    Lookup tries the exact surface first, then the lowercased surface.
    Misses fall back to the table's "<unk>" entry when present, else to
    the zero vector, so runs are deterministic.
    """

    def __init__(self, entries, dim):
        if dim <= 0:
            raise VectorFormatError("vector dimensionality must be positive")
        self.dim = dim
        self._entries = dict(entries)
        self.unk = self._entries.get("<unk>", np.zeros(dim))

    def __len__(self):
        return len(self._entries)

    def __contains__(self, surface):
        return surface in self._entries or surface.lower() in self._entries

    def lookup(self, surface):
        hit = self._entries.get(surface)
        if hit is None:
            hit = self._entries.get(surface.lower())
        return self.unk if hit is None else hit


def load_vectors(path):
    """Load a word-vector text file: one "surface v1 v2 ... vd" per line."""
    entries = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            surface = parts[0]
            numbers = [p for p in parts[1:] if p]  # tolerate runs of spaces
            if not surface or not numbers:
                raise VectorFormatError(f"line {lineno}: expected a surface and at least one number")
            try:
                vec = np.array([float(p) for p in numbers], dtype=np.float64)
            except ValueError:
                raise VectorFormatError(f"line {lineno}: unparseable number") from None
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise VectorFormatError(
                    f"line {lineno}: dimension {vec.shape[0]} differs from {dim} seen earlier"
                )
            entries[surface] = vec
    if dim is None:
        raise VectorFormatError("vector file is empty")
    return EmbeddingTable(entries, dim)


def save_vectors(table_entries, path):
    """Write a word-vector text file (the inverse of load_vectors)."""
    with open(path, "w", encoding="utf-8") as handle:
        for surface, vec in table_entries.items():
            handle.write(surface + " " + " ".join(repr(float(x)) for x in vec) + "\n")


@dataclass(frozen=True)
class ContextualAnnotation:
    """Precomputed per-token contextual vectors for one sentence pair."""

    pair_id: str
    vectors_x: np.ndarray  # (len(tokens_x), D)
    vectors_y: np.ndarray  # (len(tokens_y), D)

    @property
    def dim(self):
        return self.vectors_x.shape[1]


def load_annotations(path):
    """Load an annotation JSONL file into {pair_id: record dict}.

    Records hold per-token contextual vectors and/or POS+head arrays. An
    optional leading {"header": {...}} record carries provenance and is
    stored under the "__header__" key.
    """
    records = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise AnnotationError(f"line {lineno}: invalid JSON: {err}") from None
            if "header" in obj:
                records["__header__"] = obj["header"]
                continue
            pair_id = obj.get("pair_id")
            if pair_id is None:
                raise AnnotationError(f"line {lineno}: record lacks pair_id")
            records[pair_id] = obj
    return records


def contextual_for(records, pair_id):
    """Extract the ContextualAnnotation for one pair from loaded records."""
    obj = records.get(pair_id)
    if obj is None:
        raise AnnotationError(f"no annotation record for pair {pair_id!r}")
    if "vectors_x" not in obj or "vectors_y" not in obj:
        raise AnnotationError(f"annotation record for pair {pair_id!r} has no contextual vectors")
    vx = np.asarray(obj["vectors_x"], dtype=np.float64)
    vy = np.asarray(obj["vectors_y"], dtype=np.float64)
    if vx.ndim != 2 or vy.ndim != 2 or vx.shape[1] != vy.shape[1]:
        raise AnnotationError(f"annotation record for pair {pair_id!r} has malformed vector arrays")
    return ContextualAnnotation(pair_id=pair_id, vectors_x=vx, vectors_y=vy)


def chunk_mean(chunk, table):
    """Mean of the word vectors of a chunk's tokens (unk for misses)."""
    vecs = [table.lookup(tok.surface) for tok in chunk.tokens]
    return ChunkVector(values=np.mean(vecs, axis=0), mode="mean")


def chunk_boundary(chunk, ann, side):
    """Concatenation of the contextual vectors of a chunk's first and last word.

    A single-token chunk repeats its one vector. The output always has
    length 2*D.
    """
    vectors = ann.vectors_x if side == "x" else ann.vectors_y
    start, end = chunk.span
    if end > vectors.shape[0]:
        raise AnnotationError(
            f"pair {ann.pair_id!r}, side {side}: annotation covers {vectors.shape[0]} tokens, "
            f"chunk needs token {end - 1}"
        )
    return ChunkVector(values=np.concatenate([vectors[start], vectors[end - 1]]), mode="boundary")


def pair_chunk_vectors(pair, mode, table=None, annotations=None):
    """Stack chunk vectors for both sentences into (n, E) and (m, E) arrays."""
    if mode == "mean":
        if table is None:
            raise ValueError("mean mode needs an EmbeddingTable")
        xs = [chunk_mean(c, table).values for c in pair.x]
        ys = [chunk_mean(c, table).values for c in pair.y]
    elif mode == "boundary":
        if annotations is None:
            raise ValueError("boundary mode needs contextual annotations")
        ann = contextual_for(annotations, pair.id)
        if ann.vectors_x.shape[0] != len(pair.tokens_x) or ann.vectors_y.shape[0] != len(pair.tokens_y):
            raise AnnotationError(
                f"pair {pair.id!r}: annotation token counts "
                f"({ann.vectors_x.shape[0]}, {ann.vectors_y.shape[0]}) do not match corpus "
                f"({len(pair.tokens_x)}, {len(pair.tokens_y)})"
            )
        xs = [chunk_boundary(c, ann, "x").values for c in pair.x]
        ys = [chunk_boundary(c, ann, "y").values for c in pair.y]
    else:
        raise ValueError(f"unknown chunk representation mode {mode!r}")
    return np.stack(xs), np.stack(ys)
