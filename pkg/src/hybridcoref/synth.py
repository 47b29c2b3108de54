"""Seeded generator of annotated documents with gold coreference chains.

Documents are short news-like narratives over a fixed English vocabulary. The
generator keeps a topic entity that tends to stay in subject position, so the
correct antecedent of a pronoun is often the previous subject rather than the
nearest compatible mention. Entities are introduced and re-mentioned through
surface forms that exercise every rule sieve: repeated names, surname-only
references, title appositions, locations with a "city" suffix, and
demonstrative phrases. Descriptive person nouns ("the veteran") carry no
animacy annotation, so only a cluster that also holds the person's name knows
that they are animate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Animacy, Document, Token
from .errors import InvalidSpec
from .features import EmbeddingTable

PERSON, GROUP, LOCATION, ORG, THING = "person", "group", "location", "org", "thing"

FIRST_NAMES = {
    "Ali": "m", "Reza": "m", "Hassan": "m", "David": "m", "Emmanuel": "m",
    "Maryam": "f", "Sara": "f", "Zahra": "f", "Nasrin": "f", "Leila": "f",
}
SURNAMES = ["Karimi", "Ahmadi", "Rezaei", "Moradi", "Hosseini", "Sadeghi", "Jafari", "Beckham", "Macron", "Rahimi", "Kazemi", "Nouri"]
TITLES = ["coach", "minister", "director", "mayor", "professor", "captain"]
DESCRIPTIVE = ["veteran", "scientist", "player", "engineer", "artist", "champion"]
GROUP_NOUNS = ["students", "workers", "fans", "farmers", "residents", "teachers"]
CITIES = ["Tehran", "Mashhad", "Isfahan", "Shiraz", "Tabriz", "Qom", "Yazd", "Karaj"]
ORGS = [("Azad", "University"), ("Fajr", "Agency"), ("Sharif", "Institute"), ("Milad", "Hospital"), ("Pars", "Company")]
THINGS = [
    ("flower", "exhibition"), ("book", "festival"), ("road", "project"), ("budget", "report"),
    ("trade", "contract"), ("steel", "bridge"), ("history", "museum"), ("water", "plan"),
]
VERBS = [
    ("praised", "praise"), ("visited", "visit"), ("criticized", "criticize"), ("supported", "support"),
    ("met", "meet"), ("described", "describe"), ("reviewed", "review"), ("mentioned", "mention"),
]
INTRANSITIVE = [("arrived", "arrive"), ("spoke", "speak"), ("returned", "return")]
ADVERBS = ["yesterday", "again", "also", "recently", "today"]
ADJECTIVES = ["important", "clear", "necessary", "surprising"]


@dataclass(frozen=True)
class SynthSpec:
    entities: int = 5
    mentions: int = 4
    pronoun_rate: float = 0.4
    min_sentence_len: int = 3
    max_sentence_len: int = 30
    topic_continuity: float = 0.7
    quote_rate: float = 0.15
    nonanaphoric_rate: float = 0.1
    descriptive_rate: float = 0.35
    reflexive_rate: float = 0.05
    # sentences back to the previous mention that still allow a pronoun
    pronoun_window: int = 2
    type_weights: tuple[float, float, float, float, float] = (0.5, 0.1, 0.15, 0.1, 0.15)

    def validate(self) -> None:
        if self.entities < 1:
            raise InvalidSpec("at least one entity is required")
        if self.mentions < 1:
            raise InvalidSpec("each entity needs at least one mention (zero sentences otherwise)")
        if self.min_sentence_len < 1 or self.max_sentence_len < self.min_sentence_len:
            raise InvalidSpec("sentence length bounds must satisfy 1 <= min <= max")
        for name in ("pronoun_rate", "topic_continuity", "quote_rate", "nonanaphoric_rate",
                     "descriptive_rate", "reflexive_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1]")
        if self.pronoun_window < 1:
            raise InvalidSpec("pronoun_window must be positive")
        if len(self.type_weights) != 5 or min(self.type_weights) < 0 or sum(self.type_weights) <= 0:
            raise InvalidSpec("type_weights needs five non-negative weights")


# Person-heavy news-like narratives with strong subject continuity, used for
# the model comparisons: descriptive nouns and pleonastic "it" are common.
ABLATION_SPEC = SynthSpec(
    topic_continuity=0.85,
    nonanaphoric_rate=0.15,
    descriptive_rate=0.45,
    type_weights=(0.75, 0.1, 0.05, 0.05, 0.05),
)


@dataclass
class SynthStats:
    sentences: int = 0
    mentions: int = 0
    pronouns: int = 0
    nonanaphoric_pronouns: int = 0
    quotes: int = 0


@dataclass
class _Entity:
    idx: int
    type: str
    remaining: int
    name: tuple[str, str] | None = None  # first name / surname, or city, or org words
    gender: str = "m"
    title: str | None = None
    descriptive: str | None = None
    noun: tuple[str, str] | None = None  # modifier + head for things / orgs
    mentioned: int = 0
    last_sent: int = -100
    said_desc: bool = False

    @property
    def chain_id(self) -> int:
        return self.idx + 1


def _tok(form, lemma=None, pos="N", fine="NN", ner="O", phrase="O", animacy=Animacy.UNKNOWN):
    return dict(form=form, lemma=lemma or form.lower(), pos=pos, fine=fine, ner=ner, phrase=phrase, animacy=animacy)


class _Builder:
    """Accumulates one sentence of tokens plus (start, end, chain) mention marks."""

    def __init__(self) -> None:
        self.toks: list[dict] = []
        self.marks: list[tuple[int, int, int]] = []

    def add(self, *toks: dict) -> None:
        self.toks.extend(toks)

    def mention(self, toks: Sequence[dict], chain: int) -> None:
        start = len(self.toks)
        self.toks.extend(toks)
        self.marks.append((start, len(self.toks) - 1, chain))

    def __len__(self) -> int:
        return len(self.toks)


def _np(words: Sequence[tuple[str, str, str]], ner: str = "O", animacy=Animacy.UNKNOWN) -> list[dict]:
    """Noun phrase tokens from (form, pos, fine) triples with BIO chunk/NER tags."""
    out = []
    for i, (form, pos, fine) in enumerate(words):
        tag = "O" if ner == "O" else ("B-" if i == 0 else "I-") + ner
        out.append(_tok(form, pos=pos, fine=fine, ner=tag, phrase=("B-NP" if i == 0 else "I-NP"), animacy=animacy))
    return out


class _Generator:
    def __init__(self, spec: SynthSpec, seed: int):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.stats = SynthStats()
        self.sentences: list[list[Token]] = []
        self.next_chain = spec.entities + 1
        self.entities = self._make_entities()

    # -- entity inventory -------------------------------------------------

    def _pick(self, pool, used):
        free = [x for x in pool if x not in used]
        choice = free if free else list(pool)
        x = choice[int(self.rng.integers(len(choice)))]
        used.add(x)
        return x

    def _make_entities(self) -> list[_Entity]:
        spec, rng = self.spec, self.rng
        w = np.asarray(spec.type_weights, dtype=float)
        w = w / w.sum()
        types = [PERSON, GROUP, LOCATION, ORG, THING]
        used: set = set()
        out = []
        for i in range(spec.entities):
            t = types[int(rng.choice(5, p=w))]
            e = _Entity(i, t, spec.mentions)
            if t == PERSON:
                first = self._pick(list(FIRST_NAMES), used)
                e.name = (first, self._pick(SURNAMES, used))
                e.gender = FIRST_NAMES[first]
                e.title = self._pick(TITLES, used)
                e.descriptive = self._pick(DESCRIPTIVE, used)
            elif t == GROUP:
                e.noun = ("group", self._pick(GROUP_NOUNS, used))
            elif t == LOCATION:
                e.name = (self._pick(CITIES, used), "city")
            elif t == ORG:
                e.name = self._pick(ORGS, used)
            else:
                e.noun = self._pick(THINGS, used)
            out.append(e)
        return out

    # -- surface forms ----------------------------------------------------

    def _pronoun(self, e: _Entity, role: str) -> dict:
        if e.type == PERSON:
            form = {"subject": "he", "object": "him", "reflexive": "himself"}[role]
            if e.gender == "f":
                form = {"he": "she", "him": "her", "himself": "herself"}[form]
            anim = Animacy.ANIMATE
        elif e.type == GROUP:
            form = {"subject": "they", "object": "them", "reflexive": "themselves"}[role]
            anim = Animacy.ANIMATE
        else:
            form = "itself" if role == "reflexive" else "it"
            anim = Animacy.INANIMATE
        return _tok(form, lemma=form, pos="PRO", fine="PRP", phrase="B-NP", animacy=anim)

    def _nominal(self, e: _Entity, first: bool) -> list[dict]:
        rng = self.rng
        r = rng.random()
        if e.type == PERSON:
            f, s = e.name
            full = _np([(f, "N", "NNP"), (s, "N", "NNP")], "PER", Animacy.ANIMATE)
            if first:
                return full
            if r < self.spec.descriptive_rate:
                det = "this" if e.said_desc and rng.random() < 0.5 else "the"
                e.said_desc = True
                return _np([(det, "DET", "DT"), (e.descriptive, "N", "NN")])
            r = rng.random()
            if r < 0.4:
                return _np([(s, "N", "NNP")], "PER", Animacy.ANIMATE)
            if r < 0.7:
                return full
            return _np([("the", "DET", "DT"), (e.title, "N", "NN")])
        if e.type == GROUP:
            head = e.noun[1]
            if first or r < 0.4:
                return _np([("the", "DET", "DT"), (head, "N", "NNS")], animacy=Animacy.ANIMATE)
            if r < 0.7:
                return _np([("these", "DET", "DT"), (head, "N", "NNS")], animacy=Animacy.ANIMATE)
            return [
                _tok("group", pos="N", fine="NN", phrase="B-NP", animacy=Animacy.ANIMATE),
                _tok("of", pos="P", fine="IN", phrase="I-NP"),
                _tok(head, pos="N", fine="NNS", phrase="I-NP", animacy=Animacy.ANIMATE),
            ]
        if e.type == LOCATION:
            city, suffix = e.name
            if first or r < 0.6:
                return _np([(city, "N", "NNP")], "LOC", Animacy.INANIMATE)
            return _np([(city, "N", "NNP"), (suffix, "N", "NN")], "LOC", Animacy.INANIMATE)
        if e.type == ORG:
            a, b = e.name
            return _np([(a, "N", "NNP"), (b, "N", "NNP")], "ORG", Animacy.INANIMATE)
        mod, head = e.noun
        anim = Animacy.INANIMATE if rng.random() < 0.9 else Animacy.UNKNOWN
        if first or r < 0.35:
            return _np([("the", "DET", "DT"), (mod, "N", "NN"), (head, "N", "NN")], animacy=anim)
        if r < 0.7:
            return _np([("this", "DET", "DT"), (head, "N", "NN")], animacy=anim)
        return _np([("the", "DET", "DT"), (head, "N", "NN")], animacy=anim)

    def _realize(self, b: _Builder, e: _Entity, role: str, sent: int, allow_pronoun: bool = True) -> None:
        """Emit one mention of ``e`` into the sentence being built."""
        spec = self.spec
        first = e.mentioned == 0
        pron_ok = (
            allow_pronoun and not first and sent - e.last_sent <= spec.pronoun_window
        )
        if pron_ok and self.rng.random() < spec.pronoun_rate:
            b.mention([self._pronoun(e, role)], e.chain_id)
            self.stats.pronouns += 1
        elif first and e.type == PERSON and role == "subject" and e.remaining >= 2 and self.rng.random() < 0.35:
            # title apposition: "the coach , Ali Karimi ,"
            b.mention(_np([("the", "DET", "DT"), (e.title, "N", "NN")]), e.chain_id)
            b.add(_tok(",", pos="PUNC", fine=","))
            b.mention(self._nominal(e, True), e.chain_id)
            b.add(_tok(",", pos="PUNC", fine=","))
            self._consume(e, sent)
        else:
            b.mention(self._nominal(e, first), e.chain_id)
        self._consume(e, sent)

    def _consume(self, e: _Entity, sent: int) -> None:
        e.remaining -= 1
        e.mentioned += 1
        e.last_sent = sent
        self.stats.mentions += 1

    # -- sentence planning ------------------------------------------------

    def _choose(self, exclude: set[int], sent: int, prefer_recent: bool) -> _Entity | None:
        cands = [e for e in self.entities if e.remaining > 0 and e.idx not in exclude]
        if not cands:
            return None
        weights = []
        for e in cands:
            if e.mentioned == 0:
                weights.append(1.0)
            elif sent - e.last_sent <= self.spec.pronoun_window:
                weights.append(3.0 if prefer_recent else 1.5)
            else:
                weights.append(0.7)
        w = np.asarray(weights) / sum(weights)
        return cands[int(self.rng.choice(len(cands), p=w))]

    def _verb(self, transitive: bool = True) -> dict:
        pool = VERBS if transitive else INTRANSITIVE
        form, lemma = pool[int(self.rng.integers(len(pool)))]
        return _tok(form, lemma=lemma, pos="V", fine="VBD", phrase="B-VP")

    def _finish(self, b: _Builder) -> None:
        spec = self.spec
        while len(b) + 1 < spec.min_sentence_len:
            adv = ADVERBS[int(self.rng.integers(len(ADVERBS)))]
            b.add(_tok(adv, pos="ADV", fine="RB", phrase="B-ADVP"))
        b.add(_tok(".", pos="PUNC", fine="."))
        self._emit(b)

    def _emit(self, b: _Builder) -> None:
        sent_marks: dict[int, list[tuple[int, int]]] = {}
        for start, end, chain in b.marks:
            sent_marks.setdefault(chain, []).append((start, end))
        coref: list[list[tuple[int, int]]] = [[] for _ in b.toks]
        for chain, spans in sent_marks.items():
            for start, end in spans:
                midx = self._chain_counter.get(chain, 0)
                self._chain_counter[chain] = midx + 1
                for i in range(start, end + 1):
                    coref[i].append((chain, midx))
        toks = [
            Token(form=t["form"], lemma=t["lemma"], pos_fine=t["fine"], pos_coarse=t["pos"],
                  ner=t["ner"], ner_coarse=_coarse_ner(t["ner"]), animacy=t["animacy"],
                  phrase_type=t["phrase"], coref=tuple(c), original=t["form"])
            for t, c in zip(b.toks, coref)
        ]
        self.sentences.append(toks)
        self.stats.sentences += 1

    def _simple(self, subj: _Entity, obj: _Entity | None, loc: _Entity | None, sent: int) -> None:
        b = _Builder()
        self._realize(b, subj, "subject", sent)
        if obj is None:
            b.add(self._verb(False))
        else:
            b.add(self._verb(True))
            self._realize(b, obj, "object", sent)
        if loc is not None and len(b) + 3 <= self.spec.max_sentence_len:
            b.add(_tok("in", pos="P", fine="IN", phrase="B-PP"))
            self._realize(b, loc, "object", sent, allow_pronoun=False)
        self._finish(b)

    def _reflexive(self, subj: _Entity, sent: int) -> None:
        b = _Builder()
        self._realize(b, subj, "subject", sent)
        b.add(self._verb(True))
        b.mention([self._pronoun(subj, "reflexive")], subj.chain_id)
        self.stats.pronouns += 1
        self._consume(subj, sent)
        self._finish(b)

    def _quote(self, speaker: _Entity, obj: _Entity | None, sent: int) -> None:
        b = _Builder()
        self._realize(b, speaker, "subject", sent)
        b.add(_tok("said", lemma="say", pos="V", fine="VBD", phrase="B-VP"))
        b.add(_tok(":", pos="PUNC", fine=":"))
        b.add(_tok('"', pos="PUNC", fine="``"))
        form = "we" if speaker.type == GROUP else "I"
        b.mention([_tok(form, lemma=form.lower(), pos="PRO", fine="PRP", phrase="B-NP", animacy=Animacy.ANIMATE)],
                  speaker.chain_id)
        self.stats.pronouns += 1
        self._consume(speaker, sent)
        if obj is None:
            b.add(self._verb(False))
        else:
            b.add(self._verb(True))
            # quoted objects stay nominal: no first-person speaker confusion
            self._realize(b, obj, "object", sent, allow_pronoun=False)
        b.add(_tok(".", pos="PUNC", fine="."))
        b.add(_tok('"', pos="PUNC", fine="''"))
        self.stats.quotes += 1
        self._emit(b)

    def _nonanaphoric(self) -> None:
        b = _Builder()
        chain = self.next_chain
        self.next_chain += 1
        b.mention([_tok("it", pos="PRO", fine="PRP", phrase="B-NP", animacy=Animacy.INANIMATE)], chain)
        b.add(_tok("is", lemma="be", pos="V", fine="VBZ", phrase="B-VP"))
        adj = ADJECTIVES[int(self.rng.integers(len(ADJECTIVES)))]
        b.add(_tok(adj, pos="ADJ", fine="JJ", phrase="B-ADJP"))
        self.stats.pronouns += 1
        self.stats.nonanaphoric_pronouns += 1
        self._finish(b)

    def run(self) -> None:
        spec, rng = self.spec, self.rng
        self._chain_counter: dict[int, int] = {}
        topic: _Entity | None = None
        sent = 0
        while any(e.remaining > 0 for e in self.entities):
            if sent > 0 and rng.random() < spec.nonanaphoric_rate:
                self._nonanaphoric()
                sent += 1
                continue
            if topic is not None and topic.remaining > 0 and rng.random() < spec.topic_continuity:
                subj = topic
            else:
                subj = self._choose(set(), sent, prefer_recent=False)
            assert subj is not None
            # subject mention is emitted first, so compare against its state now
            obj = self._choose({subj.idx}, sent, prefer_recent=True) if rng.random() < 0.85 else None
            if (
                subj.type in (PERSON, GROUP) and subj.mentioned > 0 and subj.remaining >= 2
                and rng.random() < spec.quote_rate
            ):
                self._quote(subj, obj, sent)
            elif (
                subj.type in (PERSON, GROUP) and subj.mentioned > 0 and subj.remaining >= 2
                and rng.random() < spec.reflexive_rate
            ):
                self._reflexive(subj, sent)
            else:
                loc = None
                if rng.random() < 0.3:
                    locs = [e for e in self.entities if e.type == LOCATION and e.remaining > 0
                            and e.idx != subj.idx and (obj is None or e.idx != obj.idx)]
                    if locs:
                        loc = locs[int(rng.integers(len(locs)))]
                self._simple(subj, obj, loc, sent)
            topic = subj
            sent += 1


def _coarse_ner(tag: str) -> str:
    lab = tag[2:] if len(tag) > 2 and tag[1] == "-" else tag
    return lab if lab in ("PER", "LOC", "ORG") else "O"


def gen_synthetic_with_stats(spec: SynthSpec, seed: int, doc_id: str | None = None) -> tuple[Document, SynthStats]:
    spec.validate()
    g = _Generator(spec, seed)
    g.run()
    return Document.build(doc_id or f"synth-{seed}", g.sentences), g.stats


def gen_synthetic(spec: SynthSpec, seed: int, doc_id: str | None = None) -> Document:
    return gen_synthetic_with_stats(spec, seed, doc_id)[0]


def gen_corpus(spec: SynthSpec, n_docs: int, seed: int) -> list[Document]:
    """``n_docs`` documents with per-document seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(n_docs)
    return [gen_synthetic(spec, int(s), f"doc{i:04d}") for i, s in enumerate(seeds)]


def synthetic_embeddings(dim: int = 8, seed: int = 0, noise: float = 0.35) -> EmbeddingTable:
    """Toy word vectors: one random centroid per semantic class plus per-word noise."""
    rng = np.random.default_rng(seed)
    classes = {
        "person": [*FIRST_NAMES, *SURNAMES, *TITLES, *DESCRIPTIVE, "he", "him", "himself", "she",
                   "her", "herself", "I", "me"],
        "group": [*GROUP_NOUNS, "group", "they", "them", "themselves", "we", "us"],
        "place": [*CITIES, "city", "it"],
        "thing": [w for pair in THINGS for w in pair] + [w for pair in ORGS for w in pair] + ["itself"],
        "function": ["the", "this", "these", "of", "in", "said", ":", ",", ".", '"', "is",
                     *ADVERBS, *ADJECTIVES, *(v for v, _ in VERBS), *(v for v, _ in INTRANSITIVE)],
    }
    centroids = {c: rng.normal(size=dim) for c in classes}
    vectors: dict[str, np.ndarray] = {}
    for c, words in classes.items():
        for w in words:
            if w not in vectors:
                vectors[w] = centroids[c] + noise * rng.normal(size=dim)
    return EmbeddingTable(vectors, dim)
