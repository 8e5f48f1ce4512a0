"""Chunked sentence-pair corpora: domain types, `.wa` ingestion, and the
canonical JSON-lines interchange format.

Indices are 0-based everywhere inside the package. External formats use
1-based chunk and token indices where they mirror the `.wa` convention
(gold pairs, alignment-line token ids); byte-level fields such as chunk
spans and dependency heads stay 0-based. See docs/formats.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

CONTENT_TAGS = frozenset({"ADJ", "ADV", "INTJ", "NOUN", "PROPN", "VERB", "NUM"})

# Coarse UPOS inventory accepted in annotations.
UPOS_TAGS = CONTENT_TAGS | frozenset(
    {"ADP", "AUX", "CCONJ", "DET", "PART", "PRON", "PUNCT", "SCONJ", "SYM", "X"}
)


class WaParseError(ValueError):
    """Malformed `.wa` input; carries the offending 1-based line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class WaValidationError(ValueError):
    """Structurally parseable `.wa` input that violates chunk semantics."""


class SchemaError(ValueError):
    """Canonical record violating the documented schema."""

    def __init__(self, message, record_id=None, field_name=None):
        prefix = f"record {record_id!r}" if record_id is not None else "record"
        if field_name is not None:
            prefix += f", field {field_name!r}"
        super().__init__(f"{prefix}: {message}")
        self.record_id = record_id
        self.field_name = field_name


@dataclass(frozen=True)
class Token:
    surface: str
    index: int
    pos: str | None = None
    head: int | None = None


@dataclass(frozen=True)
class Chunk:
    """Contiguous token span of one sentence; span is [start, end)."""

    tokens: tuple[Token, ...]
    span: tuple[int, int]

    @property
    def surfaces(self):
        return tuple(t.surface for t in self.tokens)

    def text(self):
        return " ".join(self.surfaces)


@dataclass(frozen=True)
class GoldAlignment:
    """Gold chunk alignment as a set of 0-based (i, j) pairs.

    phi assignments are derived: chunk i of x is unaligned iff it occurs
    in no pair, and likewise for chunks of y.
    """

    pairs: frozenset = field(default_factory=frozenset)
    n: int = 0
    m: int = 0

    @property
    def x_unaligned(self):
        aligned = {i for i, _ in self.pairs}
        return frozenset(range(self.n)) - aligned

    @property
    def y_unaligned(self):
        aligned = {j for _, j in self.pairs}
        return frozenset(range(self.m)) - aligned

    def matrix(self):
        """Dense indicator arrays (a, a_x_phi, a_y_phi)."""
        import numpy as np

        a = np.zeros((self.n, self.m))
        for i, j in self.pairs:
            a[i, j] = 1.0
        a_x_phi = np.zeros(self.n)
        for i in self.x_unaligned:
            a_x_phi[i] = 1.0
        a_y_phi = np.zeros(self.m)
        for j in self.y_unaligned:
            a_y_phi[j] = 1.0
        return a, a_x_phi, a_y_phi


@dataclass
class ChunkedPair:
    id: str
    tokens_x: list
    tokens_y: list
    x: list
    y: list
    gold: GoldAlignment | None = None

    @property
    def n(self):
        return len(self.x)

    @property
    def m(self):
        return len(self.y)


def make_chunks(tokens, spans):
    return [Chunk(tokens=tuple(tokens[s:e]), span=(s, e)) for s, e in spans]


# ---------------------------------------------------------------------------
# `.wa` ingestion


def _parse_token_section(lines, start, stop_tag):
    """Token lines of the form "<1-based index> <surface> [ignored...]"."""
    tokens = []
    k = start
    while k < len(lines):
        lineno, line = lines[k]
        if line.strip() == stop_tag:
            return tokens, k + 1
        parts = line.split()
        if len(parts) < 2:
            raise WaParseError(f"expected '<index> <token>', got {line.strip()!r}", lineno)
        try:
            idx = int(parts[0])
        except ValueError:
            raise WaParseError(f"token index {parts[0]!r} is not an integer", lineno) from None
        if idx != len(tokens) + 1:
            raise WaParseError(f"token index {idx} out of order (expected {len(tokens) + 1})", lineno)
        tokens.append(Token(surface=parts[1], index=len(tokens)))
        k += 1
    raise WaParseError(f"unterminated token section (missing {stop_tag})", lines[start - 1][0])


def _parse_index_group(text, lineno, n_tokens, side):
    parts = text.split()
    if not parts:
        raise WaParseError(f"empty {side} side of alignment line", lineno)
    try:
        ids = [int(p) for p in parts]
    except ValueError:
        raise WaParseError(f"non-integer token index on {side} side: {text.strip()!r}", lineno) from None
    if ids == [0]:
        return None
    if 0 in ids:
        raise WaParseError(f"index 0 (not aligned) must stand alone on the {side} side", lineno)
    for t in ids:
        if not 1 <= t <= n_tokens:
            raise WaValidationError(
                f"line {lineno}: token index {t} out of range on {side} side (sentence has {n_tokens} tokens)"
            )
    group = tuple(sorted(t - 1 for t in ids))
    if group[-1] - group[0] + 1 != len(set(group)):
        raise WaValidationError(f"line {lineno}: token group {text.strip()!r} on {side} side is not contiguous")
    return group


def _groups_to_chunks(groups, side):
    """Resolve distinct token groups into an ordered chunk inventory.

    The inventory keeps the minimal groups (those not strictly containing
    another group); every referenced group must then decompose exactly
    into inventory chunks. Returns (spans, mapping group -> chunk ids).
    """
    distinct = sorted(set(groups))
    sets = {g: set(g) for g in distinct}
    atoms = [
        g
        for g in distinct
        if not any(other != g and sets[other] < sets[g] for other in distinct)
    ]
    atoms.sort(key=lambda g: g[0])
    for a, b in zip(atoms, atoms[1:]):
        if sets[a] & sets[b]:
            raise WaValidationError(f"overlapping chunk spans {a} and {b} on {side} side")
    spans = [(g[0], g[-1] + 1) for g in atoms]
    resolve = {}
    for g in distinct:
        covered = [k for k, atom in enumerate(atoms) if sets[atom] <= sets[g]]
        if set().union(*(sets[atoms[k]] for k in covered)) != sets[g]:
            raise WaValidationError(f"token group {g} on {side} side does not decompose into chunks")
        resolve[g] = covered
    return spans, resolve


def _parse_block(block_lines, sent_id):
    tokens_x = tokens_y = None
    align_lines = []
    k = 0
    lines = block_lines
    in_alignment = False
    while k < len(lines):
        lineno, line = lines[k]
        stripped = line.strip()
        if stripped == "<source>":
            tokens_x, k = _parse_token_section(lines, k + 1, "</source>")
            continue
        if stripped == "<translation>":
            tokens_y, k = _parse_token_section(lines, k + 1, "</translation>")
            continue
        if stripped == "<alignment>":
            in_alignment = True
        elif stripped == "</alignment>":
            in_alignment = False
        elif in_alignment and stripped:
            align_lines.append((lineno, stripped))
        elif stripped.startswith("//") or not stripped:
            pass
        elif not stripped.startswith("<"):
            raise WaParseError(f"unexpected content {stripped!r}", lineno)
        k += 1
    if tokens_x is None:
        raise WaParseError("sentence block has no <source> section", block_lines[0][0])
    if tokens_y is None:
        raise WaParseError("sentence block has no <translation> section", block_lines[0][0])

    rows = []
    for lineno, line in align_lines:
        fields = line.split("//")
        body = fields[0]
        if "<==>" not in body:
            raise WaParseError("alignment line lacks '<==>'", lineno)
        left_text, right_text = body.split("<==>", 1)
        left = _parse_index_group(left_text, lineno, len(tokens_x), "source")
        right = _parse_index_group(right_text, lineno, len(tokens_y), "translation")
        rows.append((left, right))

    groups_x = [g for g, _ in rows if g is not None]
    groups_y = [g for _, g in rows if g is not None]
    spans_x, resolve_x = _groups_to_chunks(groups_x, "source")
    spans_y, resolve_y = _groups_to_chunks(groups_y, "translation")

    pairs = set()
    for left, right in rows:
        if left is None or right is None:
            continue
        for i in resolve_x[left]:
            for j in resolve_y[right]:
                pairs.add((i, j))

    gold = GoldAlignment(pairs=frozenset(pairs), n=len(spans_x), m=len(spans_y))
    return ChunkedPair(
        id=sent_id,
        tokens_x=tokens_x,
        tokens_y=tokens_y,
        x=make_chunks(tokens_x, spans_x),
        y=make_chunks(tokens_y, spans_y),
        gold=gold,
    )


def parse_wa(text):
    """Parse `.wa` file contents into a list of ChunkedPair.

    Supports the alignment-oriented subset of the format: <sentence>
    blocks with <source>/<translation> token lists and an <alignment>
    section whose lines read "i1 i2 <==> j1 j2 // type // score // text".
    Token index 0 means "not aligned"; type and score fields are ignored.
    Chunk boundaries are recovered from the token groups on each side.
    """
    pairs = []
    block = None
    sent_id = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("<sentence"):
            if block is not None:
                raise WaParseError("nested <sentence> block", lineno)
            sent_id = None
            for piece in stripped.split():
                if piece.startswith('id="'):
                    sent_id = piece.split('"')[1]
            if sent_id is None:
                raise WaParseError("<sentence> tag lacks an id attribute", lineno)
            block = []
        elif stripped.startswith("</sentence>"):
            if block is None:
                raise WaParseError("</sentence> without an open block", lineno)
            pairs.append(_parse_block(block, sent_id))
            block = None
        elif block is not None:
            block.append((lineno, raw))
        elif stripped:
            raise WaParseError(f"content outside <sentence> block: {stripped!r}", lineno)
    if block is not None:
        raise WaParseError("unterminated <sentence> block", lineno)
    return pairs


# ---------------------------------------------------------------------------
# Canonical JSON-lines format


def _token_to_json(tok):
    return {"surface": tok.surface, "pos": tok.pos, "head": tok.head}


def _token_from_json(obj, index, record_id, name):
    if not isinstance(obj, dict) or "surface" not in obj:
        raise SchemaError("token entries must be objects with a 'surface' field", record_id, name)
    return Token(
        surface=obj["surface"],
        index=index,
        pos=obj.get("pos"),
        head=obj.get("head"),
    )


def pair_to_record(pair):
    record = {
        "id": pair.id,
        "tokens_x": [_token_to_json(t) for t in pair.tokens_x],
        "tokens_y": [_token_to_json(t) for t in pair.tokens_y],
        "chunks_x": [list(c.span) for c in pair.x],
        "chunks_y": [list(c.span) for c in pair.y],
    }
    if pair.gold is not None:
        record["gold"] = sorted([i + 1, j + 1] for i, j in pair.gold.pairs)
    return record


def pair_from_record(record):
    record_id = record.get("id")
    if record_id is None:
        raise SchemaError("missing field", None, "id")
    for name in ("tokens_x", "tokens_y", "chunks_x", "chunks_y"):
        if name not in record:
            raise SchemaError("missing field", record_id, name)
        if not isinstance(record[name], list):
            raise SchemaError("must be a list", record_id, name)
    tokens = {}
    for name in ("tokens_x", "tokens_y"):
        tokens[name] = [
            _token_from_json(obj, k, record_id, name) for k, obj in enumerate(record[name])
        ]
    chunks = {}
    for name, tok_name in (("chunks_x", "tokens_x"), ("chunks_y", "tokens_y")):
        spans = []
        for span in record[name]:
            if not (isinstance(span, list) and len(span) == 2):
                raise SchemaError(f"span {span!r} must be [start, end]", record_id, name)
            spans.append((int(span[0]), int(span[1])))
        chunks[name] = make_chunks(tokens[tok_name], spans)
    gold = None
    if record.get("gold") is not None:
        if not isinstance(record["gold"], list):
            raise SchemaError("must be a list of [i, j] pairs", record_id, "gold")
        pairs = set()
        for entry in record["gold"]:
            if not (isinstance(entry, list) and len(entry) == 2):
                raise SchemaError(f"entry {entry!r} must be [i, j]", record_id, "gold")
            pairs.add((int(entry[0]) - 1, int(entry[1]) - 1))
        gold = GoldAlignment(
            pairs=frozenset(pairs), n=len(chunks["chunks_x"]), m=len(chunks["chunks_y"])
        )
    return ChunkedPair(
        id=record_id,
        tokens_x=tokens["tokens_x"],
        tokens_y=tokens["tokens_y"],
        x=chunks["chunks_x"],
        y=chunks["chunks_y"],
        gold=gold,
    )


def save_canonical(pairs, path):
    """Write pairs to a canonical JSON-lines corpus file."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair_to_record(pair), ensure_ascii=False) + "\n")


def load_canonical(path):
    """Load a canonical JSON-lines corpus file."""
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise SchemaError(f"line {lineno} is not valid JSON: {err}") from None
            pairs.append(pair_from_record(record))
    return pairs


# ---------------------------------------------------------------------------
# Validation


def validate(pair):
    """Collect every invariant violation of a ChunkedPair.

    Returns a list of human-readable violation strings; an empty list
    means the pair is well formed.
    """
    violations = []
    for side, tokens, chunks in (("x", pair.tokens_x, pair.x), ("y", pair.tokens_y, pair.y)):
        n_tokens = len(tokens)
        if n_tokens == 0:
            violations.append(f"{side}: sentence has no tokens")
        if not chunks:
            violations.append(f"{side}: sentence has no chunks")
        for k, tok in enumerate(tokens):
            if tok.index != k:
                violations.append(f"{side}: token {k} carries index {tok.index}")
            if tok.head is not None and not 0 <= tok.head < n_tokens:
                violations.append(f"{side}: token {k} head {tok.head} out of range")
            if tok.pos is not None and tok.pos not in UPOS_TAGS:
                violations.append(f"{side}: token {k} has unknown POS tag {tok.pos!r}")
        covered = set()
        prev_end = None
        for k, chunk in enumerate(chunks):
            start, end = chunk.span
            if not (0 <= start < end <= n_tokens):
                violations.append(f"{side}: chunk {k} span {chunk.span} out of range")
                continue
            span_set = set(range(start, end))
            if covered & span_set:
                violations.append(f"{side}: chunk {k} span {chunk.span} overlaps an earlier chunk")
            if prev_end is not None and start < prev_end:
                violations.append(f"{side}: chunk {k} span {chunk.span} out of order")
            covered |= span_set
            prev_end = end
        if len(covered) not in (0, n_tokens) and all(0 <= s < e <= n_tokens for s, e in (c.span for c in chunks)):
            missing = sorted(set(range(n_tokens)) - covered)
            violations.append(f"{side}: chunk spans leave token gap at {missing}")
    if pair.gold is not None:
        if pair.gold.n != pair.n or pair.gold.m != pair.m:
            violations.append(
                f"gold dimensions ({pair.gold.n}, {pair.gold.m}) disagree with chunks ({pair.n}, {pair.m})"
            )
        for i, j in pair.gold.pairs:
            if not 0 <= i < pair.n:
                violations.append(f"gold pair ({i + 1}, {j + 1}): x index out of range")
            if not 0 <= j < pair.m:
                violations.append(f"gold pair ({i + 1}, {j + 1}): y index out of range")
    return violations


def merge_annotations(pairs, annotations):
    """Copy POS tags and dependency heads from annotation records.

    ``annotations`` maps pair id to an object with pos_x/pos_y/heads_x/
    heads_y sequences (see docs/formats.md). Pairs without a matching
    record are returned unchanged.
    """
    merged = []
    for pair in pairs:
        ann = annotations.get(pair.id)
        if ann is None:
            merged.append(pair)
            continue
        new_tokens = {}
        for name, tokens in (("x", pair.tokens_x), ("y", pair.tokens_y)):
            pos = ann.get(f"pos_{name}")
            heads = ann.get(f"heads_{name}")
            if pos is not None and len(pos) != len(tokens):
                raise SchemaError(f"pos_{name} length {len(pos)} != {len(tokens)} tokens", pair.id, f"pos_{name}")
            if heads is not None and len(heads) != len(tokens):
                raise SchemaError(
                    f"heads_{name} length {len(heads)} != {len(tokens)} tokens", pair.id, f"heads_{name}"
                )
            new_tokens[name] = [
                replace(
                    tok,
                    pos=pos[k] if pos is not None else tok.pos,
                    head=heads[k] if heads is not None else tok.head,
                )
                for k, tok in enumerate(tokens)
            ]
        spans_x = [c.span for c in pair.x]
        spans_y = [c.span for c in pair.y]
        merged.append(
            ChunkedPair(
                id=pair.id,
                tokens_x=new_tokens["x"],
                tokens_y=new_tokens["y"],
                x=make_chunks(new_tokens["x"], spans_x),
                y=make_chunks(new_tokens["y"], spans_y),
                gold=pair.gold,
            )
        )
    return merged
