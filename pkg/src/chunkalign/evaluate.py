"""Discrete alignment decoding and F1 scoring.

Decoding takes the (n+1) x (m+1) probability grid (transport plan, or
row distributions plus the y-side phi probabilities in the
one-directional model) and keeps, for every real row and column, its
argmax cell unless that argmax is the phi cell. F1 is measured over the
predicted versus gold chunk pairs, pooled over the corpus (micro) with a
per-pair macro average as a secondary figure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import GoldAlignment
from .ot import TransportPlan


@dataclass(frozen=True)
class DecodedAlignment:
    """Predicted chunk pairs (0-based) plus the unaligned index sets."""

    pairs: frozenset
    x_unaligned: frozenset
    y_unaligned: frozenset
    n: int
    m: int


@dataclass(frozen=True)
class ScoreReport:
    precision: float
    recall: float
    f1: float
    predicted: int
    gold: int
    matched: int
    macro_f1: float | None = None
    pairs: int | None = None

    def lines(self):
        out = [
            f"precision: {self.precision:.6f}",
            f"recall: {self.recall:.6f}",
            f"f1: {self.f1:.6f}",
            f"predicted: {self.predicted}",
            f"gold: {self.gold}",
            f"matched: {self.matched}",
        ]
        if self.macro_f1 is not None:
            out.append(f"macro_f1: {self.macro_f1:.6f}")
        if self.pairs is not None:
            out.append(f"pairs: {self.pairs}")
        return out


def probability_grid(plan_or_rows, gate_vectors=None):
    """Assemble the (n+1) x (m+1) grid argmax decoding runs on.

    A TransportPlan is used as is. Row distributions (n, m+1) from the
    one-directional model are completed with the phi row 1 - g_y; the
    (phi, phi) corner never takes part in any argmax and is left at 0.
    """
    if isinstance(plan_or_rows, TransportPlan):
        return plan_or_rows.p, plan_or_rows.n, plan_or_rows.m
    rows = np.asarray(plan_or_rows, dtype=np.float64)
    if gate_vectors is None:
        raise ValueError("row-distribution decoding needs the gate vectors for the phi row")
    n, m = rows.shape[0], rows.shape[1] - 1
    grid = np.zeros((n + 1, m + 1))
    grid[:n, :] = rows
    grid[n, :m] = 1.0 - gate_vectors.g_y
    return grid, n, m


def decode(plan_or_rows, gate_vectors=None, mutual=False):
    """Argmax decoding of a probability grid into a discrete alignment.

    Union mode (default) keeps row argmaxes and column argmaxes, which
    admits many-to-one alignments; mutual mode keeps only cells that win
    both their row and their column, for one-to-one ablations.
    """
    grid, n, m = probability_grid(plan_or_rows, gate_vectors)
    row_winners = set()
    for i in range(n):
        j = int(np.argmax(grid[i, :]))
        if j != m:
            row_winners.add((i, j))
    col_winners = set()
    for j in range(m):
        i = int(np.argmax(grid[:, j]))
        if i != n:
            col_winners.add((i, j))
    pairs = (row_winners & col_winners) if mutual else (row_winners | col_winners)
    x_unaligned = frozenset(range(n)) - {i for i, _ in pairs}
    y_unaligned = frozenset(range(m)) - {j for _, j in pairs}
    return DecodedAlignment(
        pairs=frozenset(pairs), x_unaligned=x_unaligned, y_unaligned=y_unaligned, n=n, m=m
    )


def _prf(matched, predicted, gold):
    if predicted == 0 and gold == 0:
        return 1.0, 1.0, 1.0
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def f1(pred, gold):
    """Precision/recall/F1 of one predicted alignment against gold.

    Counted over real chunk pairs only (phi assignments are implied by
    their absence). Both empty scores 1.0; exactly one empty scores 0.
    """
    if (pred.n, pred.m) != (gold.n, gold.m):
        raise ValueError(
            f"prediction dimensions ({pred.n}, {pred.m}) != gold dimensions ({gold.n}, {gold.m})"
        )
    matched = len(pred.pairs & gold.pairs)
    precision, recall, score = _prf(matched, len(pred.pairs), len(gold.pairs))
    return ScoreReport(
        precision=precision,
        recall=recall,
        f1=score,
        predicted=len(pred.pairs),
        gold=len(gold.pairs),
        matched=matched,
    )


def evaluate_corpus(predictions, corpus):
    """Micro-averaged F1 over a corpus, with the macro mean as a side figure.

    ``predictions`` is a list of DecodedAlignment parallel to ``corpus``,
    every pair of which must carry gold.
    """
    if len(corpus) == 0:
        raise ValueError("cannot evaluate an empty corpus")
    if len(predictions) != len(corpus):
        raise ValueError(f"{len(predictions)} predictions for {len(corpus)} pairs")
    matched = predicted = gold_count = 0
    per_pair = []
    for pred, pair in zip(predictions, corpus):
        if pair.gold is None:
            raise ValueError(f"pair {pair.id!r} has no gold alignment")
        report = f1(pred, pair.gold)
        matched += report.matched
        predicted += report.predicted
        gold_count += report.gold
        per_pair.append(report.f1)
    precision, recall, score = _prf(matched, predicted, gold_count)
    return ScoreReport(
        precision=precision,
        recall=recall,
        f1=score,
        predicted=predicted,
        gold=gold_count,
        matched=matched,
        macro_f1=float(np.mean(per_pair)),
        pairs=len(corpus),
    )


# ---------------------------------------------------------------------------
# Alignment output files (1-based indices, see docs/formats.md)


def write_alignments(pairs_with_predictions, path):
    """One line per pair: id, "i-j" pairs, then the phi index lists."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair, pred in pairs_with_predictions:
            cells = " ".join(f"{i + 1}-{j + 1}" for i, j in sorted(pred.pairs))
            x_phi = " ".join(str(i + 1) for i in sorted(pred.x_unaligned))
            y_phi = " ".join(str(j + 1) for j in sorted(pred.y_unaligned))
            handle.write(f"{pair.id}\t{cells}\tx_phi: {x_phi}\ty_phi: {y_phi}\n")


def read_alignments(path):
    """Parse an alignment output file into {pair_id: DecodedAlignment}."""
    decoded = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 4 or not fields[2].startswith("x_phi:") or not fields[3].startswith("y_phi:"):
                raise ValueError(f"line {lineno}: malformed alignment line")
            pair_id = fields[0]
            pairs = set()
            for cell in fields[1].split():
                i, j = cell.split("-")
                pairs.add((int(i) - 1, int(j) - 1))
            x_unaligned = frozenset(int(t) - 1 for t in fields[2][len("x_phi:"):].split())
            y_unaligned = frozenset(int(t) - 1 for t in fields[3][len("y_phi:"):].split())
            n = max([i + 1 for i, _ in pairs] + [i + 1 for i in x_unaligned] + [0])
            m = max([j + 1 for _, j in pairs] + [j + 1 for j in y_unaligned] + [0])
            decoded[pair_id] = DecodedAlignment(
                pairs=frozenset(pairs),
                x_unaligned=x_unaligned,
                y_unaligned=y_unaligned,
                n=n,
                m=m,
            )
    return decoded


def gold_to_decoded(gold: GoldAlignment):
    """View a gold alignment as a DecodedAlignment (for fixtures and tests)."""
    return DecodedAlignment(
        pairs=gold.pairs,
        x_unaligned=gold.x_unaligned,
        y_unaligned=gold.y_unaligned,
        n=gold.n,
        m=gold.m,
    )
