"""Pronoun/candidate-entity feature vectors and word-embedding distances.

Slots are numbered 1-54. Slots flagged ``hybrid_only`` are left out in
mention-pair mode; slots at entity level read the whole candidate cluster.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document
from .errors import CandidateNotPreceding, DimensionMismatch, EmptyFile, NotAPronoun, RaggedDimensions, VocabMismatch
from .mentions import (
    THIRD,
    Lexicons,
    Mention,
    MentionKind,
    PronounClass,
    grammatical_roles,
)
from .sieves import EntityStore


class Mode(enum.Enum):
    MENTION_PAIR = "mention_pair"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Slot:
    index: int
    name: str
    level: str  # "M" or "E"
    hybrid_only: bool
    kind: str  # "bool" | "int" | "cat" | "real"


def _slots() -> tuple[Slot, ...]:
    rows = [
        (1, "pron_is_personal", "M", False, "bool"),
        (2, "pron_is_demonstrative", "M", False, "bool"),
        (3, "pron_is_reflexive", "M", False, "bool"),
        (4, "pron_is_third_person", "M", False, "bool"),
        (5, "pron_is_speech", "M", False, "bool"),
        (6, "pron_left_pos_1", "M", False, "cat"),
        (7, "pron_left_pos_2", "M", False, "cat"),
        (8, "pron_left_pos_3", "M", False, "cat"),
        (9, "pron_right_pos_1", "M", False, "cat"),
        (10, "pron_right_pos_2", "M", False, "cat"),
        (11, "pron_right_pos_3", "M", False, "cat"),
        (12, "pron_is_subject", "M", False, "bool"),
        (13, "pron_is_object", "M", False, "bool"),
        (14, "pron_number", "M", False, "cat"),
        (15, "pron_animacy", "M", True, "cat"),
        (16, "pron_person", "M", True, "cat"),
        (17, "ant_token_count", "M", False, "int"),
        (18, "ant_is_pronoun", "M", False, "bool"),
        (19, "ant_is_demonstrative_phrase", "M", False, "bool"),
        (20, "ant_left_pos_1", "M", False, "cat"),
        (21, "ant_left_pos_2", "M", False, "cat"),
        (22, "ant_left_pos_3", "M", False, "cat"),
        (23, "ant_right_pos_1", "M", False, "cat"),
        (24, "ant_right_pos_2", "M", False, "cat"),
        (25, "ant_right_pos_3", "M", False, "cat"),
        (26, "ant_number", "M", False, "cat"),
        (27, "ant_is_subject", "M", False, "bool"),
        (28, "ant_is_object", "M", False, "bool"),
        (29, "chain_size", "E", True, "int"),
        (30, "ant_is_reflexive", "M", True, "bool"),
        (31, "ant_type", "M", True, "cat"),
        (32, "chain_first_sentence", "E", True, "int"),
        (33, "ant_animacy", "M", True, "cat"),
        (34, "ant_person", "M", True, "cat"),
        (35, "ant_ner", "M", True, "cat"),
        (36, "chain_rank", "E", True, "int"),
        (37, "chain_animacy", "E", True, "cat"),
        (38, "sentence_distance", "M", False, "int"),
        (39, "token_distance", "M", False, "int"),
        (40, "number_agreement", "M", False, "int"),
        (41, "subject_agreement", "M", False, "bool"),
        (42, "object_agreement", "M", False, "bool"),
        (43, "string_match", "M", False, "bool"),
        (44, "token_distance_lt3", "M", False, "bool"),
        (45, "same_sentence", "M", False, "bool"),
        (46, "chain_min_sentence_distance", "E", True, "int"),
        (47, "ant_longer_than_pron", "M", True, "bool"),
        (48, "animacy_agreement", "M", True, "int"),
        (49, "person_agreement", "M", True, "int"),
        (50, "pron_object_ant_subject", "M", True, "int"),
        (51, "pron_reflexive_ant_subject", "M", True, "int"),
        (52, "head_embedding_distance", "M", True, "real"),
        (53, "mean_embedding_distance", "M", True, "real"),
        (54, "ant_sentence_embedding_distance", "M", True, "real"),
    ]
    return tuple(Slot(*r) for r in rows)


SLOTS = _slots()
SLOT_BY_INDEX = {s.index: s for s in SLOTS}
ENTITY_SLOTS = frozenset(s.index for s in SLOTS if s.level == "E")
HYBRID_ONLY = frozenset(s.index for s in SLOTS if s.hybrid_only)
EMBEDDING_SLOTS = frozenset({52, 53, 54})

BOUNDARY = "<B>"
CHAIN_RANK_CAP = 10

# three-valued agreement, ordered so trees can threshold it
DISAGREE, UNKNOWN, AGREE = 0, 1, 2
# conditioned same-sentence tests
NOT_MET, MET_SAME, MET_OTHER = 0, 1, 2


def slots_for(mode: Mode, embeddings: bool) -> tuple[int, ...]:
    out = []
    for s in SLOTS:
        if mode is Mode.MENTION_PAIR and s.hybrid_only:
            continue
        if s.index in EMBEDDING_SLOTS and not embeddings:
            continue
        out.append(s.index)
    return tuple(out)


@dataclass
class FeatureVector:
    mode: Mode
    values: dict[int, float | int | str]
    pronoun_embedding: np.ndarray | None = None
    antecedent_embedding: np.ndarray | None = None

    def __getitem__(self, slot: int):
        return self.values[slot]

    def named(self) -> dict[str, float | int | str]:
        return {SLOT_BY_INDEX[k].name: v for k, v in sorted(self.values.items())}


def agreement(a: frozenset[str], b: frozenset[str]) -> int:
    if not a or not b:
        return UNKNOWN
    return AGREE if a & b else DISAGREE


def set_code(values: frozenset[str]) -> str:
    return "+".join(sorted(values)) if values else "Unknown"


# --------------------------------------------------------------------------
# embeddings


class OOVPolicy(enum.Enum):
    ZERO = "zero"
    MEAN = "mean"


class EmbeddingTable:
    def __init__(self, vectors: Mapping[str, Sequence[float]], dim: int | None = None,
                 oov_policy: OOVPolicy = OOVPolicy.ZERO):
        items = list(vectors.items())
        if dim is None:
            if not items:
                raise ValueError("dim is required for an empty table")
            dim = len(items[0][1])
        self.dim = dim
        self.oov_policy = oov_policy
        self.vectors: dict[str, np.ndarray] = {}
        for tok, vec in items:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise DimensionMismatch(f"vector for {tok!r} has shape {arr.shape}, expected ({dim},)")
            self.vectors[tok] = arr
        if self.vectors:
            self._mean = np.mean(np.stack(list(self.vectors.values())), axis=0)
        else:
            self._mean = np.zeros(dim)
        self._zero = np.zeros(dim)

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors or token.lower() in self.vectors

    def lookup(self, token: str) -> np.ndarray:
        v = self.vectors.get(token)
        if v is None:
            v = self.vectors.get(token.lower())
        if v is None:
            return self._mean if self.oov_policy is OOVPolicy.MEAN else self._zero
        return v

    def mean(self, tokens: Iterable[str]) -> np.ndarray:
        vecs = [self.lookup(t) for t in tokens]
        if not vecs:
            return self._zero
        return np.mean(np.stack(vecs), axis=0)


def load_embeddings(path: str | Path, oov_policy: OOVPolicy = OOVPolicy.ZERO) -> EmbeddingTable:
    """Read a ``token v1 ... vd`` text file; the first occurrence of a token wins."""
    vectors: dict[str, list[float]] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            tok, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
                if dim == 0:
                    raise RaggedDimensions(lineno, 1, 0)
            elif len(vals) != dim:
                raise RaggedDimensions(lineno, dim, len(vals))
            if tok not in vectors:
                vectors[tok] = [float(x) for x in vals]
    if dim is None:
        raise EmptyFile(f"{path} holds no vectors")
    return EmbeddingTable(vectors, dim, oov_policy)


def _head_form(doc: Document, m: Mention) -> str:
    return doc.tokens[m.head_token].form


def extract_embedding_features(pron: Mention, ant: Mention, doc: Document, table: EmbeddingTable):
    """Return (head distance, span-mean distance, antecedent-vs-pronoun-sentence distance, pron vec, ant vec)."""
    vp = table.lookup(_head_form(doc, pron))
    va = table.lookup(_head_form(doc, ant))
    if vp.shape[0] != table.dim or va.shape[0] != table.dim:
        raise DimensionMismatch("embedding lookup returned a vector of the wrong size")
    e52 = float(np.linalg.norm(vp - va))
    mp = table.mean(pron.forms)
    ma = table.mean(ant.forms)
    e53 = float(np.linalg.norm(mp - ma))
    sent_forms = [t.form for t in doc.sentences[pron.sent].tokens]
    e54 = float(np.linalg.norm(ma - table.mean(sent_forms)))
    return e52, e53, e54, vp, va


# --------------------------------------------------------------------------
# pair features


class FeatureExtractor:
    """Per-document feature extraction with the document-level caches it needs."""

    def __init__(self, doc: Document, mentions: Sequence[Mention], lex: Lexicons,
                 table: EmbeddingTable | None = None):
        self.doc = doc
        self.mentions = mentions
        self.lex = lex
        self.table = table

    @cached_property
    def roles(self) -> dict[int, str]:
        return grammatical_roles(list(self.mentions), self.doc, self.lex)

    def _context(self, m: Mention) -> list[str]:
        toks = self.doc.sentences[m.sent].tokens
        s, a, b = m.span
        out = []
        for k in (1, 2, 3):
            out.append(toks[a - k].pos_coarse if a - k >= 0 else BOUNDARY)
        for k in (1, 2, 3):
            out.append(toks[b + k].pos_coarse if b + k < len(toks) else BOUNDARY)
        return out

    def _person(self, m: Mention) -> frozenset[str]:
        if m.attrs.person:
            return m.attrs.person
        return frozenset() if m.is_pronoun else frozenset({THIRD})

    def _entity_person(self, store: EntityStore, eid: int) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for mid in store.members(eid):
            out |= self._person(self.mentions[mid])
        return out

    def nearest_member(self, pron: Mention, store: EntityStore, eid: int) -> Mention:
        best = None
        for mid in store.members(eid):
            c = self.mentions[mid]
            if mid >= pron.id or (c.start <= pron.start and pron.end <= c.end):
                continue
            key = (pron.sent - c.sent, pron.start - c.start, c.id)
            if best is None or key < best[0]:
                best = (key, c)
        if best is None:
            raise CandidateNotPreceding(f"entity {eid} has no mention before pronoun {pron.id}")
        return best[1]

    def extract(self, pron: Mention, eid: int, store: EntityStore, mode: Mode) -> FeatureVector:
        if not pron.is_pronoun:
            raise NotAPronoun(f"mention {pron.id} ({pron.text!r}) is not a pronoun")
        ant = self.nearest_member(pron, store, eid)
        hybrid = mode is Mode.HYBRID
        roles = self.roles
        pc = pron.pronoun_class
        v: dict[int, float | int | str] = {}
        v[1] = int(pc is PronounClass.PERSONAL)
        v[2] = int(pc is PronounClass.DEMONSTRATIVE)
        v[3] = int(pc is PronounClass.REFLEXIVE)
        v[4] = int(THIRD in pron.attrs.person)
        v[5] = int(pron.text.lower() in self.lex.speech_pronouns)
        for slot, pos in zip(range(6, 12), self._context(pron)):
            v[slot] = pos
        p_subj = roles.get(pron.id) == "subject"
        p_obj = roles.get(pron.id) == "object"
        v[12] = int(p_subj)
        v[13] = int(p_obj)
        v[14] = set_code(pron.attrs.number)

        a_subj = roles.get(ant.id) == "subject"
        a_obj = roles.get(ant.id) == "object"
        v[17] = len(ant)
        v[18] = int(ant.is_pronoun)
        v[19] = int(ant.kind is MentionKind.DEMONSTRATIVE)
        for slot, pos in zip(range(20, 26), self._context(ant)):
            v[slot] = pos
        v[26] = set_code(ant.attrs.number)
        v[27] = int(a_subj)
        v[28] = int(a_obj)

        ent_attrs = store.attrs(eid)
        same_sent = pron.sent == ant.sent
        tok_dist = pron.start - ant.end
        v[38] = pron.sent - ant.sent
        v[39] = tok_dist
        v[40] = agreement(pron.attrs.number, ent_attrs.number)
        v[41] = int(p_subj and a_subj)
        v[42] = int(p_obj and a_obj)
        v[43] = int(pron.text.lower() == ant.text.lower())
        v[44] = int(tok_dist < 3)
        v[45] = int(same_sent)

        fv = FeatureVector(mode, v)
        if not hybrid:
            return fv

        members = store.members(eid)
        v[15] = set_code(pron.attrs.animacy)
        v[16] = set_code(pron.attrs.person)
        v[29] = len(members)
        v[30] = int(ant.pronoun_class is PronounClass.REFLEXIVE)
        if ant.is_pronoun:
            v[31] = "pronoun"
        elif ant.kind in (MentionKind.PROPER_NOUN, MentionKind.NAMED_ENTITY):
            v[31] = "proper"
        else:
            v[31] = "common"
        v[32] = self.mentions[members[0]].sent
        v[33] = set_code(ant.attrs.animacy)
        v[34] = set_code(self._person(ant))
        v[35] = ant.ner
        v[36] = min(bisect.bisect_left(store.entity_ids, eid), CHAIN_RANK_CAP)
        v[37] = set_code(ent_attrs.animacy)
        v[46] = min(abs(pron.sent - self.mentions[mid].sent) for mid in members)
        v[47] = int(len(ant) > len(pron))
        v[48] = agreement(pron.attrs.animacy, ent_attrs.animacy)
        v[49] = agreement(self._person(pron), self._entity_person(store, eid))
        if p_obj and a_subj:
            v[50] = MET_SAME if same_sent else MET_OTHER
        else:
            v[50] = NOT_MET
        if pc is PronounClass.REFLEXIVE and a_subj:
            v[51] = MET_SAME if same_sent else MET_OTHER
        else:
            v[51] = NOT_MET
        if self.table is not None:
            e52, e53, e54, vp, va = extract_embedding_features(pron, ant, self.doc, self.table)
            v[52], v[53], v[54] = e52, e53, e54
            fv.pronoun_embedding = vp
            fv.antecedent_embedding = va
        return fv


def extract_pair_features(
    pron: Mention,
    cand: int,
    doc: Document,
    store: EntityStore,
    lex: Lexicons,
    mode: Mode,
    table: EmbeddingTable | None = None,
) -> FeatureVector:
    """One-off extraction; use :class:`FeatureExtractor` when scoring many pairs."""
    return FeatureExtractor(doc, store.mentions, lex, table).extract(pron, cand, store, mode)


# --------------------------------------------------------------------------
# vectorisation


UNK = 0


@dataclass
class FeatureSpace:
    """Column layout and categorical codebooks, frozen when a model is trained."""

    mode: Mode
    embedding_dim: int = 0  # 0 disables embedding features
    codebooks: dict[int, dict[str, int]] = field(default_factory=dict)

    @property
    def slots(self) -> tuple[int, ...]:
        return slots_for(self.mode, self.embedding_dim > 0)

    @property
    def n_columns(self) -> int:
        return len(self.slots) + 2 * self.embedding_dim

    @property
    def column_names(self) -> list[str]:
        names = [SLOT_BY_INDEX[s].name for s in self.slots]
        for prefix in ("pron_emb", "ant_emb"):
            names += [f"{prefix}_{i}" for i in range(self.embedding_dim)]
        return names

    @property
    def categorical_columns(self) -> dict[int, int]:
        """Column index -> number of codes (UNK included)."""
        out = {}
        for col, s in enumerate(self.slots):
            if SLOT_BY_INDEX[s].kind == "cat":
                out[col] = len(self.codebooks.get(s, {})) + 1
        return out

    def fit(self, vectors: Iterable[FeatureVector]) -> "FeatureSpace":
        cats = [s for s in self.slots if SLOT_BY_INDEX[s].kind == "cat"]
        seen: dict[int, set[str]] = {s: set() for s in cats}
        for fv in vectors:
            for s in cats:
                seen[s].add(str(fv.values[s]))
        self.codebooks = {s: {val: i + 1 for i, val in enumerate(sorted(seen[s]))} for s in cats}
        return self

    def transform(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        slots = self.slots
        d = self.embedding_dim
        X = np.zeros((len(vectors), self.n_columns), dtype=np.float64)
        for r, fv in enumerate(vectors):
            if fv.mode is not self.mode:
                raise VocabMismatch(f"vector mode {fv.mode.value} != feature space mode {self.mode.value}")
            row = X[r]
            for c, s in enumerate(slots):
                val = fv.values.get(s)
                if val is None:
                    raise VocabMismatch(f"slot {s} missing from feature vector")
                if SLOT_BY_INDEX[s].kind == "cat":
                    row[c] = self.codebooks.get(s, {}).get(str(val), UNK)
                else:
                    row[c] = float(val)
            if d:
                pe, ae = fv.pronoun_embedding, fv.antecedent_embedding
                if pe is None or ae is None or pe.shape[0] != d or ae.shape[0] != d:
                    raise VocabMismatch(f"feature vector lacks {d}-dim embedding blocks")
                row[len(slots) : len(slots) + d] = pe
                row[len(slots) + d :] = ae
        return X

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "embedding_dim": self.embedding_dim,
            "codebooks": {str(k): v for k, v in sorted(self.codebooks.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls(Mode(d["mode"]), int(d["embedding_dim"]),
                   {int(k): dict(v) for k, v in d["codebooks"].items()})
