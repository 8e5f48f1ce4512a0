"""Corpus annotation: read canonical records, write annotation JSONL.

The output file starts with a header record carrying the embedding and
parser provenance, followed by one record per pair with vectors_x,
vectors_y, pos_x, pos_y, heads_x, heads_y. Records are built completely
in memory and written at the end, so a failing pair never leaves a
partial file behind.
"""

from __future__ import annotations

import argparse
import json
import sys

from .annotate import load_parser
from .embeddings import WordAlignmentError, load_embedder

FORMAT_VERSION = 1


class CorpusFormatError(ValueError):
    pass


def read_corpus_tokens(path):
    """(pair_id, surfaces_x, surfaces_y) triples from a canonical corpus."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusFormatError(f"line {lineno}: invalid JSON: {err}") from None
            try:
                pair_id = record["id"]
                surfaces_x = [tok["surface"] for tok in record["tokens_x"]]
                surfaces_y = [tok["surface"] for tok in record["tokens_y"]]
            except (KeyError, TypeError):
                raise CorpusFormatError(
                    f"line {lineno}: record lacks id/tokens_x/tokens_y with surface fields"
                ) from None
            out.append((pair_id, surfaces_x, surfaces_y))
    return out


def export(corpus_path, out_path, model="hash768", parser="heuristic"):
    """Annotate every pair of a corpus; returns the number of records.

    Raises on any per-pair failure (naming the pair id) before anything
    is written.
    """
    encode, dim, embed_provenance = load_embedder(model)
    annotate, parser_provenance = load_parser(parser)
    pairs = read_corpus_tokens(corpus_path)

    records = []
    for pair_id, surfaces_x, surfaces_y in pairs:
        record = {"pair_id": pair_id}
        for side, surfaces in (("x", surfaces_x), ("y", surfaces_y)):
            if not surfaces:
                raise CorpusFormatError(f"pair {pair_id!r}: side {side} has no tokens")
            try:
                vectors = encode(surfaces)
            except WordAlignmentError as err:
                raise WordAlignmentError(f"pair {pair_id!r}, side {side}: {err}") from None
            if vectors.shape != (len(surfaces), dim):
                raise WordAlignmentError(
                    f"pair {pair_id!r}, side {side}: got {vectors.shape[0]} vectors "
                    f"for {len(surfaces)} tokens"
                )
            tags, heads = annotate(surfaces)
            record[f"vectors_{side}"] = [[float(x) for x in vec] for vec in vectors]
            record[f"pos_{side}"] = tags
            record[f"heads_{side}"] = heads
        records.append(record)

    header = {
        "header": {
            "format_version": FORMAT_VERSION,
            "model": embed_provenance,
            "parser": parser_provenance,
            "dim": dim,
        }
    }
    with open(out_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(header) + "\n")
        for record in records:
            handle.write(json.dumps(record) + "\n")
    return len(records)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="chunkalign-export",
        description="Produce contextual word vectors and POS/head annotations for a corpus",
    )
    parser.add_argument("--corpus", required=True, help="canonical corpus JSONL")
    parser.add_argument("--out", required=True, help="annotation JSONL to write")
    parser.add_argument("--model", default="hash768",
                        help="embedding backend: 'hash768' or a transformers model name/path")
    parser.add_argument("--parser", default="heuristic", dest="parser_backend",
                        help="annotation backend: 'heuristic' or 'spacy:<model>'")
    args = parser.parse_args(argv)
    try:
        count = export(args.corpus, args.out, model=args.model, parser=args.parser_backend)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {count} annotation records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
