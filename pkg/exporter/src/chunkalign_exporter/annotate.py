"""POS tagging and dependency heads.

Two backends: spaCy when it is installed together with an English
pipeline, and a self-contained heuristic annotator otherwise. The
heuristic tagger is a documented placeholder: closed-class lexicons plus
suffix rules for the coarse tag set, and a right-attaching head scheme
that always yields a valid tree (strictly rising attachment chains that
terminate at a single self-headed root). Its purpose is to produce
schema-correct, deterministic annotations where no real parser is
available; it is not a linguistics claim.
"""

from __future__ import annotations

DETERMINERS = {"the", "a", "an", "this", "that", "these", "those", "some", "any", "no", "every", "each"}
ADPOSITIONS = {"in", "on", "of", "at", "by", "for", "with", "from", "to", "into", "over", "under",
               "near", "after", "before", "between", "through", "against", "during", "without"}
PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "him", "her", "them", "his", "its",
            "their", "my", "your", "our", "who", "what", "which"}
AUXILIARIES = {"is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had",
               "do", "does", "did", "will", "would", "can", "could", "may", "might", "shall",
               "should", "must"}
CONJUNCTIONS = {"and", "or", "but", "nor", "yet"}
SUBORDINATORS = {"because", "although", "while", "if", "since", "unless", "whereas", "that"}
PARTICLES = {"not", "n't"}
COMMON_ADVERBS = {"very", "too", "also", "now", "then", "here", "there", "again", "soon", "often",
                  "never", "always", "still", "just", "indoors", "outdoors", "fast"}
COMMON_VERBS = {"say", "says", "said", "make", "makes", "made", "go", "goes", "went", "take",
                "takes", "took", "get", "gets", "got", "see", "sees", "saw", "know", "knows",
                "knew", "run", "runs", "ran", "die", "dies", "died", "kill", "kills", "killed",
                "win", "wins", "won", "lift", "lifts", "lifted", "play", "plays", "played",
                "attack", "attacks", "attacked", "strike", "strikes", "struck", "hold", "holds",
                "held", "meet", "meets", "met", "find", "finds", "found", "lead", "leads", "led"}
NUMBER_WORDS = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                "ten", "eleven", "twelve", "dozen", "hundred", "thousand", "million", "billion"}

ADJ_SUFFIXES = ("ful", "ous", "ive", "ible", "able", "al", "ish", "less", "ic")
VERB_SUFFIXES = ("ize", "ise", "ate", "ify")

CONTENTISH = {"NOUN", "PROPN", "VERB", "AUX", "NUM"}


def tag_token(surface, position):
    """Coarse POS tag for one token given its sentence position."""
    lower = surface.lower()
    if not any(ch.isalnum() for ch in surface):
        return "PUNCT"
    if surface.replace(",", "").replace(".", "").isdigit() or lower in NUMBER_WORDS:
        return "NUM"
    if lower in DETERMINERS:
        return "DET"
    if lower in ADPOSITIONS:
        return "ADP"
    if lower in PRONOUNS:
        return "PRON"
    if lower in AUXILIARIES:
        return "AUX"
    if lower in CONJUNCTIONS:
        return "CCONJ"
    if lower in SUBORDINATORS:
        return "SCONJ"
    if lower in PARTICLES:
        return "PART"
    if lower in COMMON_VERBS:
        return "VERB"
    if lower in COMMON_ADVERBS or (lower.endswith("ly") and len(lower) > 3):
        return "ADV"
    if position > 0 and surface[:1].isupper():
        return "PROPN"
    if lower.endswith(VERB_SUFFIXES) or lower.endswith(("ing", "ed")) and len(lower) > 4:
        return "VERB"
    if lower.endswith(ADJ_SUFFIXES):
        return "ADJ"
    return "NOUN"


def attach_heads(tags):
    """Right-attaching head assignment over a tagged sentence.

    The root is the first verb or auxiliary (falling back to the last
    noun-like token, then the first token) and heads itself. Every other
    token attaches to the nearest content-ish token to its right, or to
    the root when none exists.
    """
    n = len(tags)
    root = next((k for k, t in enumerate(tags) if t in ("VERB", "AUX")), None)
    if root is None:
        root = next((k for k in reversed(range(n)) if tags[k] in ("NOUN", "PROPN")), 0)
    heads = []
    for k in range(n):
        if k == root:
            heads.append(k)
            continue
        target = next((j for j in range(k + 1, n) if tags[j] in CONTENTISH), None)
        heads.append(root if target is None else target)
    return heads, root


def heuristic_annotate(surfaces):
    """(tags, heads) for a list of token surfaces."""
    tags = [tag_token(s, k) for k, s in enumerate(surfaces)]
    heads, _ = attach_heads(tags)
    return tags, heads


def spacy_annotate(surfaces, pipeline):
    """(tags, heads) via a loaded spaCy pipeline, honoring the given
    tokenization."""
    from spacy.tokens import Doc

    doc = Doc(pipeline.vocab, words=list(surfaces))
    doc = pipeline(doc)
    tags = [tok.pos_ for tok in doc]
    heads = [tok.head.i for tok in doc]
    return tags, heads


def load_parser(name):
    """Resolve a parser backend name to (callable, provenance string)."""
    if name == "heuristic":
        return heuristic_annotate, "heuristic-right-attach-v1"
    if name.startswith("spacy:"):
        import spacy

        pipeline = spacy.load(name.split(":", 1)[1])
        return (lambda surfaces: spacy_annotate(surfaces, pipeline)), name
    raise ValueError(f"unknown parser backend {name!r} (use 'heuristic' or 'spacy:<model>')")
