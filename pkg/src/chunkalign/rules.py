"""Rule-based side supervision for alignment scores.

Two predicates mark chunk pairs that ought to align: a relation-lexicon
lookup over content-word unigrams and bigrams, and a syntactic
similarity score from POS tags and dependency structure. Fired cells
receive a constant score boost of strength rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CONTENT_TAGS

SYMMETRIC_RELATIONS = frozenset({"Synonym", "Antonym", "SimilarTo", "RelatedTo", "DistinctFrom"})
DIRECTIONAL_RELATIONS = frozenset({"IsA", "FormOf"})
PERMITTED_RELATIONS = SYMMETRIC_RELATIONS | DIRECTIONAL_RELATIONS


class LexiconFormatError(ValueError):
    pass


class ParseAnnotationError(ValueError):
    """A rule needed POS tags or dependency heads that are missing."""


@dataclass(frozen=True)
class SynSimConfig:
    """Threshold for the syntactic-similarity predicate and the POS tags
    counted as content words."""

    tau: float = 0.8
    content_tags: frozenset = field(default_factory=lambda: CONTENT_TAGS)


class RelationLexicon:
    """Set of (term_a, term_b, relation) triples over unigrams and bigrams.

    Terms are lowercased. Lookup is symmetric for Synonym, Antonym,
    SimilarTo, RelatedTo, and DistinctFrom, and directional (stored
    order only) for IsA and FormOf.
    """

    def __init__(self, triples=()):
        self._forward = set()
        for term_a, term_b, relation in triples:
            self.add(term_a, term_b, relation)

    def add(self, term_a, term_b, relation):
        if relation not in PERMITTED_RELATIONS:
            raise LexiconFormatError(
                f"relation {relation!r} not in permitted set {sorted(PERMITTED_RELATIONS)}"
            )
        self._forward.add((term_a.lower(), term_b.lower(), relation))

    def __len__(self):
        return len(self._forward)

    def related(self, term_a, term_b):
        """True iff some permitted relation links term_a (from x) to term_b."""
        a, b = term_a.lower(), term_b.lower()
        for x, y, relation in self._forward:
            if (x, y) == (a, b):
                return True
            if (x, y) == (b, a) and relation in SYMMETRIC_RELATIONS:
                return True
        return False


def load_triples(path):
    """Load a tab-separated relation-triple file: term_a, term_b, relation.

    Terms may contain a single space (bigrams)."""
    lexicon = RelationLexicon()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise LexiconFormatError(f"line {lineno}: expected 3 tab-separated fields")
            try:
                lexicon.add(*parts)
            except LexiconFormatError as err:
                raise LexiconFormatError(f"line {lineno}: {err}") from None
    return lexicon


def _chunk_terms(chunk, content_tags):
    """Lookup terms of a chunk: lowercased content-word unigrams plus
    adjacent bigrams containing at least one content word."""
    for tok in chunk.tokens:
        if tok.pos is None:
            raise ParseAnnotationError(f"token {tok.surface!r} lacks a POS tag")
    terms = [tok.surface.lower() for tok in chunk.tokens if tok.pos in content_tags]
    for left, right in zip(chunk.tokens, chunk.tokens[1:]):
        if left.pos in content_tags or right.pos in content_tags:
            terms.append(f"{left.surface.lower()} {right.surface.lower()}")
    return terms


def rel_predicate(xi, yj, lexicon, cfg=SynSimConfig()):
    """True iff a lexicon relation links a term of chunk xi to one of yj."""
    terms_x = _chunk_terms(xi, cfg.content_tags)
    terms_y = _chunk_terms(yj, cfg.content_tags)
    return any(lexicon.related(a, b) for a in terms_x for b in terms_y)


def _jaccard(a, b):
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def _require_parse(tokens):
    for tok in tokens:
        if tok.pos is None or tok.head is None:
            raise ParseAnnotationError(
                f"token {tok.surface!r} lacks {'a POS tag' if tok.pos is None else 'a dependency head'}"
            )


def _ancestor_pos(index, tokens):
    """POS tags on the path from a word to the root, word excluded."""
    tags = set()
    seen = {index}
    node = index
    while tokens[node].head != node:
        node = tokens[node].head
        if node in seen:  # defensive: malformed heads must not loop forever
            break
        seen.add(node)
        tags.add(tokens[node].pos)
    return tags


def _children_pos(index, tokens):
    return {tok.pos for tok in tokens if tok.head == index and tok.index != index}


def word_syn_sim(w1, tokens_x, w2, tokens_y):
    """Syntactic similarity of two words, each given by index into its
    sentence's annotated token list.

    Mean of three parts: Jaccard overlap of the POS tags of the words'
    ancestors, the same for their direct children, and an indicator that
    both words are roots. Empty-versus-empty Jaccard counts as 1.
    """
    _require_parse(tokens_x)
    _require_parse(tokens_y)
    anc = _jaccard(_ancestor_pos(w1, tokens_x), _ancestor_pos(w2, tokens_y))
    child = _jaccard(_children_pos(w1, tokens_x), _children_pos(w2, tokens_y))
    both_roots = 1.0 if tokens_x[w1].head == w1 and tokens_y[w2].head == w2 else 0.0
    return (anc + child + both_roots) / 3.0


def chunk_syn_sim(xi, yj, tokens_x, tokens_y):
    """Average over words of xi of their best word similarity in yj."""
    best = [
        max(word_syn_sim(tok.index, tokens_x, other.index, tokens_y) for other in yj.tokens)
        for tok in xi.tokens
    ]
    return float(np.mean(best))


@dataclass(frozen=True)
class ConstraintMatrix:
    """Rule firings per cell: m = rel_fired | syn_fired, scaled by rho
    when applied to scores."""

    m: np.ndarray
    rel_fired: np.ndarray
    syn_fired: np.ndarray
    rho: float

    @property
    def shift(self):
        return self.rho * self.m


def build_constraints(pair, lexicon, cfg=SynSimConfig(), rho=0.0):
    """Evaluate both rules on every chunk pair of a ChunkedPair.

    The relation rule needs POS tags; the syntactic rule also needs
    dependency heads. The threshold comparison is closed: a similarity
    exactly equal to tau fires.
    """
    n, m = pair.n, pair.m
    rel = np.zeros((n, m), dtype=bool)
    syn = np.zeros((n, m), dtype=bool)
    for i, xi in enumerate(pair.x):
        for j, yj in enumerate(pair.y):
            if lexicon is not None and len(lexicon):
                rel[i, j] = rel_predicate(xi, yj, lexicon, cfg)
            syn[i, j] = chunk_syn_sim(xi, yj, pair.tokens_x, pair.tokens_y) >= cfg.tau
    fired = (rel | syn).astype(np.float64)
    return ConstraintMatrix(m=fired, rel_fired=rel, syn_fired=syn, rho=float(rho))


def apply_constraints(scores, constraints):
    """Return a copy of a ScoreMatrix with theta_prime = theta + rho * m."""
    from .net import ScoreMatrix

    if constraints.m.shape != scores.theta.shape:
        raise ValueError(
            f"constraint matrix shape {constraints.m.shape} != theta shape {scores.theta.shape}"
        )
    return ScoreMatrix(
        theta=scores.theta,
        b_x_phi=scores.b_x_phi,
        b_y_phi=scores.b_y_phi,
        theta_prime=scores.theta + constraints.shift,
    )
