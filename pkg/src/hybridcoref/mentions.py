"""Mention detection, head finding and the attribute lattice."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import NULL, Animacy, Document, Span
from .errors import MissingAnnotations

SINGULAR, PLURAL = "Singular", "Plural"
ANIMATE, INANIMATE = "Animate", "Inanimate"
FIRST, SECOND, THIRD = "First", "Second", "Third"
MASC, FEM, NEUT = "Masc", "Fem", "Neut"

ATTRIBUTES = ("number", "animacy", "person", "gender")
_DOMAINS = {
    "number": {SINGULAR, PLURAL},
    "animacy": {ANIMATE, INANIMATE},
    "person": {FIRST, SECOND, THIRD},
    "gender": {MASC, FEM, NEUT},
}


@dataclass(frozen=True)
class AttributeLattice:
    """Value sets per attribute; an empty set means unknown."""

    number: frozenset[str] = frozenset()
    animacy: frozenset[str] = frozenset()
    person: frozenset[str] = frozenset()
    gender: frozenset[str] = frozenset()

    def union(self, other: "AttributeLattice") -> "AttributeLattice":
        return AttributeLattice(
            self.number | other.number,
            self.animacy | other.animacy,
            self.person | other.person,
            self.gender | other.gender,
        )

    @classmethod
    def of(cls, **kw: Iterable[str]) -> "AttributeLattice":
        for k, vals in kw.items():
            bad = set(vals) - _DOMAINS[k]
            if bad:
                raise ValueError(f"invalid {k} values {sorted(bad)}")
        return cls(**{k: frozenset(v) for k, v in kw.items()})


EMPTY_ATTRS = AttributeLattice()


class MentionKind(enum.Enum):
    PRONOUN = "Pronoun"
    PROPER_NOUN = "ProperNoun"
    COMMON_NOUN = "CommonNoun"
    NAMED_ENTITY = "NamedEntity"
    DEMONSTRATIVE = "Demonstrative"


class PronounClass(enum.Enum):
    PERSONAL = "Personal"
    DEMONSTRATIVE = "Demonstrative"
    REFLEXIVE = "Reflexive"


class DetectionMode(enum.Enum):
    FROM_ANNOTATIONS = "annotations"
    FROM_GOLD = "gold"


@dataclass(frozen=True)
class Mention:
    id: int
    span: Span
    head_token: int  # document position
    kind: MentionKind
    attrs: AttributeLattice
    pronoun_class: PronounClass | None = None
    start: int = 0  # document positions, inclusive
    end: int = 0
    forms: tuple[str, ...] = ()
    head_form: str = ""
    ner: str = "O"

    @property
    def sent(self) -> int:
        return self.span[0]

    @property
    def is_pronoun(self) -> bool:
        return self.kind is MentionKind.PRONOUN

    @property
    def text(self) -> str:
        return " ".join(self.forms)

    def __len__(self) -> int:
        return self.end - self.start + 1


def mention_order_key(span: Span) -> tuple[int, int, int]:
    s, a, b = span
    return (s, a, -(b - a))


# --------------------------------------------------------------------------
# lexicons


@dataclass(frozen=True)
class TagSet:
    noun: frozenset[str] = frozenset({"N"})
    pronoun: frozenset[str] = frozenset({"PRO"})
    verb: frozenset[str] = frozenset({"V"})
    preposition: frozenset[str] = frozenset({"P"})
    punctuation: frozenset[str] = frozenset({"PUNC"})
    proper: frozenset[str] = frozenset({"NNP", "NNPS"})  # fine tags
    plural: frozenset[str] = frozenset({"NNS", "NNPS"})  # fine tags
    person_ner: frozenset[str] = frozenset({"PER", "PERSON"})


@dataclass(frozen=True)
class PronounEntry:
    pronoun_class: PronounClass
    number: frozenset[str] = frozenset()
    person: frozenset[str] = frozenset()
    animacy: frozenset[str] = frozenset()
    gender: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Lexicons:
    pronoun_table: Mapping[str, PronounEntry]
    quote_verbs: frozenset[str] = frozenset()
    title_nouns: frozenset[str] = frozenset()
    name_gazetteer: Mapping[str, frozenset[str]] = field(default_factory=dict)
    demonstrative_markers: frozenset[str] = frozenset()
    speech_pronouns: frozenset[str] = frozenset()
    tags: TagSet = TagSet()
    head_rule: str = "rightmost_noun"

    def pronoun(self, form: str) -> PronounEntry | None:
        return self.pronoun_table.get(form.lower())


def _read_entries(path: Path) -> list[tuple[str, dict[str, list[str]]]]:
    """Parse ``form<TAB>field=value;field=value`` lines; ``#`` starts a comment."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            form, _, rest = line.partition("\t")
            fields: dict[str, list[str]] = {}
            for item in filter(None, (x.strip() for x in rest.split(";"))):
                k, _, v = item.partition("=")
                fields[k.strip()] = [x.strip() for x in v.split(",") if x.strip()]
            out.append((form.strip(), fields))
    return out


def load_lexicons(directory: str | Path | None = None, head_rule: str = "rightmost_noun") -> Lexicons:
    """Load lexicon list files from ``directory`` (default: bundled English lists).

    Missing files yield empty lists, except ``pronouns.tsv`` which is required.
    """
    base = Path(directory) if directory is not None else Path(str(resources.files("hybridcoref") / "data" / "en"))

    def entries(name: str) -> list[tuple[str, dict[str, list[str]]]]:
        p = base / name
        return _read_entries(p) if p.exists() else []

    table = {}
    for form, f in entries("pronouns.tsv"):
        table[form.lower()] = PronounEntry(
            PronounClass(f.get("class", ["Personal"])[0]),
            frozenset(f.get("number", [])),
            frozenset(f.get("person", [])),
            frozenset(f.get("animacy", [])),
            frozenset(f.get("gender", [])),
        )
    if not table:
        raise FileNotFoundError(f"no pronoun table under {base}")
    tag_kw = {role: frozenset(f.get("values", [])) for role, f in entries("tags.tsv")}
    return Lexicons(
        pronoun_table=table,
        quote_verbs=frozenset(w.lower() for w, _ in entries("quote_verbs.txt")),
        title_nouns=frozenset(w.lower() for w, _ in entries("titles.txt")),
        name_gazetteer={w.lower(): frozenset(f.get("gender", [])) for w, f in entries("names.tsv")},
        demonstrative_markers=frozenset(w.lower() for w, _ in entries("demonstratives.txt")),
        speech_pronouns=frozenset(w.lower() for w, _ in entries("speech_pronouns.txt")),
        tags=TagSet(**tag_kw) if tag_kw else TagSet(),
        head_rule=head_rule,
    )


# --------------------------------------------------------------------------
# detection


def _label(tag: str) -> tuple[str, str]:
    """Split a BIO tag into (prefix, label); plain labels have an empty prefix."""
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BIES":
        return tag[0], tag[2:]
    return "", tag


def _runs(tags: list[str], keep) -> list[tuple[int, int, str]]:
    """Maximal labelled runs in a BIO (or plain-label) sequence."""
    runs = []
    start, cur = None, None
    for i, tag in enumerate(tags + ["O"]):
        prefix, lab = _label(tag)
        active = keep(lab)
        if cur is not None and (not active or lab != cur or prefix in ("B", "S")):
            runs.append((start, i - 1, cur))
            cur = None
        if active and cur is None:
            start, cur = i, lab
    return runs


def _annotated_spans(doc: Document, lex: Lexicons) -> set[Span]:
    spans: set[Span] = set()
    for sent in doc.sentences:
        toks = sent.tokens
        for a, b, _ in _runs([t.phrase_type for t in toks], lambda lab: lab == "NP"):
            spans.add((sent.index, a, b))
        for a, b, _ in _runs([t.ner for t in toks], lambda lab: lab not in ("O", NULL, "")):
            spans.add((sent.index, a, b))
        for i, t in enumerate(toks):
            if t.pos_coarse in lex.tags.pronoun:
                spans.add((sent.index, i, i))
    return spans


def mention_head(span: Span, doc: Document, lex: Lexicons | None = None) -> int:
    """Document position of the syntactic head of ``span``.

    rightmost_noun: last noun before any trailing prepositional modifier.
    leftmost_noun: first noun of the span.
    """
    tags = lex.tags if lex is not None else TagSet()
    rule = lex.head_rule if lex is not None else "rightmost_noun"
    s, a, b = span
    toks = doc.sentences[s].tokens
    base = doc.sentence_offsets[s]
    if a == b:
        return base + a
    if rule == "leftmost_noun":
        for i in range(a, b + 1):
            if toks[i].pos_coarse in tags.noun:
                return base + i
        return base + a
    stop = b
    for i in range(a + 1, b + 1):
        if toks[i].pos_coarse in tags.preposition:
            stop = i - 1
            break
    for i in range(stop, a - 1, -1):
        if toks[i].pos_coarse in tags.noun:
            return base + i
    for i in range(b, a - 1, -1):
        if toks[i].pos_coarse in tags.noun:
            return base + i
    return base + stop


def span_ner(span: Span, head: int, doc: Document) -> str:
    """NER label of the head token, else the first labelled token of the span."""
    ht = doc.tokens[head]
    lab = _label(ht.ner)[1]
    if lab not in ("O", NULL, ""):
        return lab
    for t in doc.span_tokens(span):
        lab = _label(t.ner)[1]
        if lab not in ("O", NULL, ""):
            return lab
    return "O"


def _classify(span: Span, head: int, ner: str, doc: Document, lex: Lexicons) -> tuple[MentionKind, PronounClass | None]:
    toks = doc.span_tokens(span)
    if len(toks) == 1 and toks[0].pos_coarse in lex.tags.pronoun:
        entry = lex.pronoun(toks[0].form)
        return MentionKind.PRONOUN, entry.pronoun_class if entry else PronounClass.PERSONAL
    if len(toks) > 1 and toks[0].form.lower() in lex.demonstrative_markers:
        return MentionKind.DEMONSTRATIVE, None
    if doc.tokens[head].pos_fine in lex.tags.proper:
        return MentionKind.PROPER_NOUN, None
    if ner != "O":
        return MentionKind.NAMED_ENTITY, None
    return MentionKind.COMMON_NOUN, None


def compute_attributes(m: Mention, doc: Document, lex: Lexicons) -> AttributeLattice:
    if m.kind is MentionKind.PRONOUN:
        entry = lex.pronoun(m.forms[0]) if m.forms else None
        if entry is None:
            return EMPTY_ATTRS
        return AttributeLattice(entry.number, entry.animacy, entry.person, entry.gender)
    head = doc.tokens[m.head_token]
    tags = lex.tags
    if head.pos_fine in tags.plural:
        number = frozenset({PLURAL})
    elif head.pos_coarse in tags.noun:
        number = frozenset({SINGULAR})
    else:
        number = frozenset()
    if m.ner != "O":
        animacy = frozenset({ANIMATE}) if m.ner in tags.person_ner else frozenset({INANIMATE})
    elif head.lemma.lower() in lex.title_nouns or head.form.lower() in lex.title_nouns:
        animacy = frozenset({ANIMATE})
    elif head.form.lower() in lex.name_gazetteer:
        animacy = frozenset({ANIMATE})
    elif head.animacy is Animacy.ANIMATE:
        animacy = frozenset({ANIMATE})
    elif head.animacy is Animacy.INANIMATE:
        animacy = frozenset({INANIMATE})
    else:
        animacy = frozenset()
    gender = lex.name_gazetteer.get(head.form.lower(), frozenset())
    return AttributeLattice(number=number, animacy=animacy, gender=gender)


def make_mention(mid: int, span: Span, doc: Document, lex: Lexicons) -> Mention:
    head = mention_head(span, doc, lex)
    ner = span_ner(span, head, doc)
    kind, pclass = _classify(span, head, ner, doc, lex)
    s, a, b = span
    base = doc.sentence_offsets[s]
    m = Mention(
        id=mid, span=span, head_token=head, kind=kind, attrs=EMPTY_ATTRS,
        pronoun_class=pclass, start=base + a, end=base + b,
        forms=doc.span_forms(span), head_form=doc.tokens[head].form, ner=ner,
    )
    return _with_attrs(m, compute_attributes(m, doc, lex))


def _with_attrs(m: Mention, attrs: AttributeLattice) -> Mention:
    return Mention(
        id=m.id, span=m.span, head_token=m.head_token, kind=m.kind, attrs=attrs,
        pronoun_class=m.pronoun_class, start=m.start, end=m.end, forms=m.forms,
        head_form=m.head_form, ner=m.ner,
    )


def detect_mentions(
    doc: Document, lex: Lexicons, mode: DetectionMode = DetectionMode.FROM_ANNOTATIONS
) -> list[Mention]:
    if mode is DetectionMode.FROM_GOLD:
        spans = {sp for ch in doc.gold_chains for sp in ch.spans}
    else:
        if all(t.phrase_type in (NULL, "") for t in doc.tokens):
            raise MissingAnnotations(f"document {doc.doc_id!r} has no phrase-type annotations")
        spans = _annotated_spans(doc, lex)
    ordered = sorted(spans, key=mention_order_key)
    return [make_mention(i, sp, doc, lex) for i, sp in enumerate(ordered)]


# --------------------------------------------------------------------------
# grammatical role


def grammatical_roles(mentions: list[Mention], doc: Document, lex: Lexicons) -> dict[int, str]:
    """Positional subject/object guess per sentence.

    Among mentions not nested in another mention, the first one of a sentence
    is the subject and the next one not introduced by a preposition is the
    object. Quoted material is treated as its own clause.
    """
    roles: dict[int, str] = {}
    by_clause: dict[tuple[int, bool], list[Mention]] = {}
    quoted = quoted_positions(doc)
    spans = [(m.start, m.end) for m in mentions]
    for m in mentions:
        nested = any(s <= m.start and m.end <= e and (s, e) != (m.start, m.end) for s, e in spans)
        if nested:
            continue
        by_clause.setdefault((m.sent, m.start in quoted), []).append(m)
    for clause in by_clause.values():
        clause.sort(key=lambda m: m.start)
        roles[clause[0].id] = "subject"
        for m in clause[1:]:
            prev = doc.tokens[m.start - 1] if m.start > 0 else None
            if prev is not None and prev.pos_coarse in lex.tags.preposition:
                continue
            roles[m.id] = "object"
            break
    return roles


QUOTE_CHARS = frozenset({'"', "«", "»", "“", "”", "''", "``"})


def quoted_positions(doc: Document) -> set[int]:
    """Document positions strictly inside quotation marks (per sentence)."""
    inside: set[int] = set()
    for sent in doc.sentences:
        base = doc.sentence_offsets[sent.index]
        open_ = False
        for i, t in enumerate(sent.tokens):
            if t.form in QUOTE_CHARS:
                open_ = not open_
                continue
            if open_:
                inside.add(base + i)
    return inside
