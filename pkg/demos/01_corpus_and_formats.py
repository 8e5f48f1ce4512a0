"""Walk through corpus ingestion: parse a .wa file, inspect the
recovered chunks and gold alignment, and round-trip the canonical
format.

Run from the repository root:  python3 demos/01_corpus_and_formats.py
"""

import tempfile
from pathlib import Path

from chunkalign import load_canonical, parse_wa, save_canonical, validate

WA_FILE = Path(__file__).resolve().parent.parent / "tests" / "data" / "sample.wa"


def main():
    pairs = parse_wa(WA_FILE.read_text())
    print(f"parsed {len(pairs)} sentence pairs from {WA_FILE.name}\n")

    for pair in pairs:
        print(f"pair {pair.id}: n={pair.n} x-chunks, m={pair.m} y-chunks")
        print("  x:", " | ".join(c.text() for c in pair.x))
        print("  y:", " | ".join(c.text() for c in pair.y))
        cells = ", ".join(f"x{i + 1}~y{j + 1}" for i, j in sorted(pair.gold.pairs))
        print("  gold:", cells or "(nothing aligned)")
        if pair.gold.x_unaligned:
            print("  unaligned x chunks:", sorted(i + 1 for i in pair.gold.x_unaligned))
        print()

    # every pair satisfies the structural invariants
    for pair in pairs:
        problems = validate(pair)
        assert not problems, problems
    print("validate(): no violations in any pair")

    # the canonical JSONL format round-trips exactly
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "corpus.jsonl"
        save_canonical(pairs, path)
        assert load_canonical(path) == pairs
        print(f"canonical round-trip OK ({path.stat().st_size} bytes for {len(pairs)} pairs)")


if __name__ == "__main__":
    main()
