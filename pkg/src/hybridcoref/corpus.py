"""Annotated documents and the 13-column CoNLL-style corpus format.

Column order, one token per line::

    doc  sent  form  pos  ner  lemma  original  ner3  chain_idx  chain  animacy  phrase  pos_fine

Sentences are separated by blank lines; ``#begin document <id>`` and
``#end document`` delimit documents. ``-`` marks an absent value. A token that
belongs to several (nested) mentions lists its chain ids and mention indices
joined with ``|``, in matching order.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import EmptyInput, InconsistentChain, MalformedLine

log = logging.getLogger(__name__)

N_COLUMNS = 13
NULL = "-"


class Animacy(enum.Enum):
    ANIMATE = "animate"
    INANIMATE = "inanimate"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value: str) -> "Animacy":
        v = value.lower()
        if v == "animate":
            return cls.ANIMATE
        if v == "inanimate":
            return cls.INANIMATE
        return cls.UNKNOWN

    def to_column(self) -> str:
        return NULL if self is Animacy.UNKNOWN else self.value


@dataclass(frozen=True)
class Token:
    form: str
    lemma: str = NULL
    pos_fine: str = NULL
    pos_coarse: str = NULL
    ner: str = "O"
    ner_coarse: str = "O"
    animacy: Animacy = Animacy.UNKNOWN
    phrase_type: str = "O"
    sent_index: int = 0
    token_index: int = 0
    doc_token_index: int = 0
    # (chain_id, mention_index) pairs; more than one when mentions nest
    coref: tuple[tuple[int, int], ...] = ()
    original: str = NULL

    @property
    def coref_chain_id(self) -> int | None:
        return self.coref[0][0] if self.coref else None

    @property
    def coref_mention_index(self) -> int | None:
        return self.coref[0][1] if self.coref else None


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)


Span = tuple[int, int, int]  # (sent_index, start_token, end_token_inclusive)


@dataclass(frozen=True)
class GoldChain:
    chain_id: int
    spans: tuple[Span, ...]


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]
    gold_chains: tuple[GoldChain, ...] = ()

    @classmethod
    def build(cls, doc_id: str, sentences: Sequence[Sequence[Token]]) -> "Document":
        """Index raw token lists and derive gold chains from their coref pairs.

        Position fields on the given tokens are overwritten.
        """
        built = []
        pos = 0
        for si, toks in enumerate(sentences):
            row = []
            for ti, tok in enumerate(toks):
                row.append(_reindex(tok, si, ti, pos))
                pos += 1
            built.append(Sentence(si, tuple(row)))
        sents = tuple(built)
        return cls(doc_id, sents, reconstruct_chains(sents))

    @cached_property
    def tokens(self) -> tuple[Token, ...]:
        return tuple(t for s in self.sentences for t in s.tokens)

    @cached_property
    def sentence_offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for s in self.sentences:
            out.append(pos)
            pos += len(s.tokens)
        return tuple(out)

    def doc_pos(self, sent: int, tok: int) -> int:
        return self.sentence_offsets[sent] + tok

    def span_tokens(self, span: Span) -> tuple[Token, ...]:
        s, a, b = span
        return self.sentences[s].tokens[a : b + 1]

    def span_forms(self, span: Span) -> tuple[str, ...]:
        return tuple(t.form for t in self.span_tokens(span))

    @cached_property
    def chain_of_span(self) -> dict[Span, set[int]]:
        out: dict[Span, set[int]] = {}
        for ch in self.gold_chains:
            for sp in ch.spans:
                out.setdefault(sp, set()).add(ch.chain_id)
        return out


def _reindex(tok: Token, si: int, ti: int, pos: int) -> Token:
    if (tok.sent_index, tok.token_index, tok.doc_token_index) == (si, ti, pos):
        return tok
    return Token(
        form=tok.form, lemma=tok.lemma, pos_fine=tok.pos_fine, pos_coarse=tok.pos_coarse,
        ner=tok.ner, ner_coarse=tok.ner_coarse, animacy=tok.animacy,
        phrase_type=tok.phrase_type, sent_index=si, token_index=ti,
        doc_token_index=pos, coref=tok.coref, original=tok.original,
    )


def reconstruct_chains(sentences: Sequence[Sentence]) -> tuple[GoldChain, ...]:
    """Group maximal runs of tokens sharing (chain_id, mention_index) into spans."""
    runs: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for s in sentences:
        for t in s.tokens:
            for pair in t.coref:
                runs.setdefault(pair, []).append((s.index, t.token_index))
    chains: dict[int, list[Span]] = {}
    for (cid, midx), positions in runs.items():
        sent = positions[0][0]
        toks = [p[1] for p in positions]
        if any(p[0] != sent for p in positions) or toks != list(range(toks[0], toks[0] + len(toks))):
            raise InconsistentChain(
                f"chain {cid} mention {midx} is not one contiguous run inside a sentence"
            )
        chains.setdefault(cid, []).append((sent, toks[0], toks[-1]))
    out = []
    for cid in sorted(chains):
        spans = sorted(chains[cid])
        if len(set(spans)) != len(spans):
            raise InconsistentChain(f"chain {cid} repeats a span")
        out.append(GoldChain(cid, tuple(spans)))
    return tuple(out)


# --------------------------------------------------------------------------
# parsing


def _parse_coref(chain_col: str, idx_col: str, lineno: int) -> tuple[tuple[int, int], ...]:
    if chain_col == NULL and idx_col == NULL:
        return ()
    if chain_col == NULL or idx_col == NULL:
        raise InconsistentChain(f"line {lineno}: chain id and mention index must both be present")
    try:
        ids = [int(x) for x in chain_col.split("|")]
        idxs = [int(x) for x in idx_col.split("|")]
    except ValueError:
        raise MalformedLine(lineno, f"non-integer chain columns {chain_col!r} / {idx_col!r}") from None
    if len(ids) != len(idxs):
        raise InconsistentChain(f"line {lineno}: {len(ids)} chain ids but {len(idxs)} mention indices")
    return tuple(zip(ids, idxs))


def _iter_blocks(lines: Iterable[str]) -> Iterator[tuple[str | None, int, list[str] | None]]:
    """Yield ('tok', lineno, cols), ('brk', lineno, None) or ('doc', lineno, None) events."""
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            yield "brk", lineno, None
            continue
        stripped = line.strip()
        if stripped.startswith("#"):
            if stripped.startswith("#begin document") or stripped.startswith("#end document"):
                yield "doc", lineno, None
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        cols = [c.strip() for c in cols]
        yield "tok", lineno, cols


def parse_conll(text: str) -> list[Document]:
    if not text.strip():
        raise EmptyInput("no tokens in input")
    docs: list[Document] = []
    cur_doc: str | None = None
    sents: list[list[Token]] = []
    cur: list[Token] = []
    cur_sent_col: str | None = None
    warned = False

    def close_sentence() -> None:
        nonlocal cur, cur_sent_col
        if cur:
            sents.append(cur)
        cur, cur_sent_col = [], None

    def close_doc() -> None:
        nonlocal sents, cur_doc
        close_sentence()
        if sents:
            docs.append(Document.build(cur_doc or "", sents))
        sents, cur_doc = [], None

    for kind, lineno, cols in _iter_blocks(text.splitlines()):
        if kind == "brk":
            close_sentence()
            continue
        if kind == "doc":
            close_doc()
            continue
        assert cols is not None
        if len(cols) < N_COLUMNS:
            raise MalformedLine(lineno, f"expected {N_COLUMNS} columns, got {len(cols)}")
        if len(cols) > N_COLUMNS and not warned:
            log.warning("line %d: %d columns, ignoring trailing ones", lineno, len(cols))
            warned = True
        (doc_id, sent_col, form, pos, ner, lemma, original, ner3,
         idx_col, chain_col, anim, phrase, pos_fine) = cols[:N_COLUMNS]
        if cur_doc is not None and doc_id != cur_doc:
            close_doc()
        if cur_sent_col is not None and sent_col != cur_sent_col:
            close_sentence()
        cur_doc = doc_id
        cur_sent_col = sent_col
        cur.append(Token(
            form=form, lemma=lemma, pos_fine=pos_fine, pos_coarse=pos, ner=ner,
            ner_coarse=ner3, animacy=Animacy.parse(anim), phrase_type=phrase,
            coref=_parse_coref(chain_col, idx_col, lineno), original=original,
        ))
    close_doc()
    if not docs:
        raise EmptyInput("no tokens in input")
    return docs


def read_conll(path) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh.read())


# --------------------------------------------------------------------------
# writing


def token_columns(doc_id: str, tok: Token) -> list[str]:
    if tok.coref:
        chain_col = "|".join(str(c) for c, _ in tok.coref)
        idx_col = "|".join(str(i) for _, i in tok.coref)
    else:
        chain_col = idx_col = NULL
    return [
        doc_id, str(tok.sent_index), tok.form, tok.pos_coarse, tok.ner, tok.lemma,
        tok.original, tok.ner_coarse, idx_col, chain_col, tok.animacy.to_column(),
        tok.phrase_type, tok.pos_fine,
    ]


def write_conll(docs: Sequence[Document]) -> str:
    out: list[str] = []
    for doc in docs:
        out.append(f"#begin document {doc.doc_id}\n")
        for sent in doc.sentences:
            for tok in sent.tokens:
                out.append("\t".join(token_columns(doc.doc_id, tok)) + "\n")
            out.append("\n")
        out.append("#end document\n")
    return "".join(out)
