"""Compact builders for hand-written fixture documents.

A token is written as ``form/POS/FINE/NER/PHRASE[/animacy]`` with ``_`` for
the default of a field, e.g. ``"Tehran/N/NNP/B-LOC/B-NP"``. Gold mentions are
given separately as ``(sent, start, end, chain)`` marks.
"""
from __future__ import annotations

from hybridcoref.corpus import Animacy, Document, Token

DEFAULTS = ["", "N", "NN", "O", "O", "-"]


def tok(spec: str, coref=()) -> Token:
    parts = spec.split("/")
    parts += ["_"] * (len(DEFAULTS) - len(parts))
    form, pos, fine, ner, phrase, anim = [d if p == "_" else p for p, d in zip(parts, DEFAULTS)]
    lab = ner[2:] if ner[1:2] == "-" else ner
    return Token(form=form, lemma=form.lower(), pos_fine=fine, pos_coarse=pos, ner=ner,
                 ner_coarse=lab if lab in ("PER", "LOC", "ORG") else "O",
                 animacy=Animacy.parse(anim), phrase_type=phrase, coref=tuple(coref), original=form)


def build_doc(sentences: list[list[str]], marks=(), doc_id: str = "fx") -> Document:
    """Build a document; ``marks`` are gold mentions (sent, start, end, chain) in document order."""
    counters: dict[int, int] = {}
    coref = [[[] for _ in s] for s in sentences]
    for s, a, b, chain in sorted(marks):
        idx = counters.get(chain, 0)
        counters[chain] = idx + 1
        for i in range(a, b + 1):
            coref[s][i].append((chain, idx))
    return Document.build(doc_id, [[tok(t, c) for t, c in zip(sent, cr)] for sent, cr in zip(sentences, coref)])


# frequently used tokens
DOT = "./PUNC/./O/O"
COMMA = ",/PUNC/,/O/O"
THE = "the/DET/DT/O/B-NP"


def mention_at(mentions, span):
    for m in mentions:
        if m.span == span:
            return m
    raise KeyError(span)
