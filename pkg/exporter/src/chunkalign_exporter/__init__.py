"""Offline annotation tool for chunk-alignment corpora.

Reads a canonical JSON-lines corpus and writes one annotation record per
pair: contextual word vectors (768 per token) plus POS tags and
dependency heads, in the JSONL schema the alignment engine loads. The
tool never imports the engine; the file formats are the contract.
"""

from .annotate import heuristic_annotate
from .embeddings import hash_vectors, pool_word_vectors
from .export import export

__version__ = "0.1.0"

__all__ = ["export", "heuristic_annotate", "hash_vectors", "pool_word_vectors", "__version__"]
