"""Training-example construction from gold chains."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..corpus import Document
from ..errors import NoGoldChains
from ..features import FeatureExtractor, FeatureVector, Mode
from ..mentions import Mention
from ..sieves import EntityStore, candidate_mentions


@dataclass
class PreparedDocument:
    """A document with detected mentions, a partial-entity store and its extractor."""

    doc: Document
    mentions: list[Mention]
    store: EntityStore
    extractor: FeatureExtractor

    @property
    def doc_id(self) -> str:
        return self.doc.doc_id

    def gold_chains(self, m: Mention) -> set[int]:
        return self.doc.chain_of_span.get(m.span, set())


@dataclass
class TrainingExample:
    features: FeatureVector
    label: bool
    provenance: tuple[str, int, int]  # (doc_id, pronoun id, candidate id)

    @property
    def doc_id(self) -> str:
        return self.provenance[0]


@dataclass(frozen=True)
class PairSample:
    """Label decision before feature extraction; candidate is an entity or mention id."""

    pronoun: int
    candidate: int
    label: bool


def closest_antecedent(prep: PreparedDocument, p: Mention) -> Mention | None:
    gold = prep.gold_chains(p)
    if not gold:
        return None
    for c in candidate_mentions(p, prep.mentions, None):
        if prep.gold_chains(c) & gold:
            return c
    return None


def sample_pairs(prep: PreparedDocument, mode: Mode) -> list[PairSample]:
    """Closest gold antecedent as the positive; everything strictly between as negatives.

    Candidates are mentions in mention-pair mode and partial entities in hybrid
    mode, where pronouns already merged by the rule sieves are skipped.
    """
    out: list[PairSample] = []
    store = prep.store
    for p in prep.mentions:
        if not p.is_pronoun:
            continue
        own = store.find(p.id)
        if mode is Mode.HYBRID and len(store.members(own)) > 1:
            continue
        ante = closest_antecedent(prep, p)
        if ante is None:
            continue
        between = [
            c for c in prep.mentions[ante.id + 1 : p.id]
            if not (c.start <= p.start and p.end <= c.end)
        ]
        if mode is Mode.MENTION_PAIR:
            out.append(PairSample(p.id, ante.id, True))
            out.extend(PairSample(p.id, c.id, False) for c in between)
        else:
            pos = store.find(ante.id)
            out.append(PairSample(p.id, pos, True))
            seen = {pos, own}
            for c in between:
                e = store.find(c.id)
                if e not in seen:
                    seen.add(e)
                    out.append(PairSample(p.id, e, False))
    return out


def build_training_set(preps: Sequence[PreparedDocument], mode: Mode) -> list[TrainingExample]:
    if preps and not any(p.doc.gold_chains for p in preps):
        raise NoGoldChains("training documents carry no gold coreference chains")
    examples = []
    for prep in preps:
        store = prep.store
        for s in sample_pairs(prep, mode):
            p = prep.mentions[s.pronoun]
            eid = store.find(s.candidate)
            fv = prep.extractor.extract(p, eid, store, mode)
            examples.append(TrainingExample(fv, s.label, (prep.doc_id, s.pronoun, s.candidate)))
    return examples


def labels(examples: Iterable[TrainingExample]) -> np.ndarray:
    return np.array([1.0 if e.label else 0.0 for e in examples])
