"""Entity-centric rule sieves that build partial coreference chains."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Document
from .errors import SameEntity, UnknownSieveName
from .mentions import (
    AttributeLattice,
    Lexicons,
    Mention,
    MentionKind,
    quoted_positions,
    FIRST,
    SECOND,
)

LOCATION_NER = frozenset({"LOC", "GPE", "LOCATION"})


@dataclass(frozen=True)
class Entity:
    id: int
    mentions: tuple[int, ...]
    attrs: AttributeLattice

    @property
    def first_mention(self) -> int:
        return self.mentions[0]

    def __len__(self) -> int:
        return len(self.mentions)


class EntityStore:
    """Union-find over mention ids; every mention starts as its own entity.

    Entity ids are the lowest mention id of the cluster, so they are stable
    under any merge order. Mention ids follow document order.
    """

    def __init__(self, mentions: Sequence[Mention]):
        self.mentions = list(mentions)
        n = len(self.mentions)
        self._parent = list(range(n))
        self._members: dict[int, list[int]] = {i: [i] for i in range(n)}
        self._attrs: dict[int, AttributeLattice] = {m.id: m.attrs for m in self.mentions}

    @classmethod
    def from_groups(cls, mentions: Sequence[Mention], groups: Iterable[Iterable[int]]) -> "EntityStore":
        store = cls(mentions)
        for g in groups:
            g = sorted(set(g))
            for other in g[1:]:
                a, b = store.find(g[0]), store.find(other)
                if a != b:
                    store.merge(a, b)
        return store

    def copy(self) -> "EntityStore":
        new = EntityStore.__new__(EntityStore)
        new.mentions = self.mentions
        new._parent = list(self._parent)
        new._members = {k: list(v) for k, v in self._members.items()}
        new._attrs = dict(self._attrs)
        return new

    def find(self, mid: int) -> int:
        parent = self._parent
        root = mid
        while parent[root] != root:
            root = parent[root]
        while parent[mid] != root:
            parent[mid], mid = root, parent[mid]
        return root

    entity_of = find

    def members(self, eid: int) -> list[int]:
        return self._members[eid]

    def attrs(self, eid: int) -> AttributeLattice:
        return self._attrs[eid]

    def entity(self, eid: int) -> Entity:
        return Entity(eid, tuple(self._members[eid]), self._attrs[eid])

    @property
    def entity_ids(self) -> list[int]:
        return sorted(self._members)

    @property
    def entities(self) -> list[Entity]:
        return [self.entity(e) for e in self.entity_ids]

    def __len__(self) -> int:
        return len(self._members)

    def merge(self, a: int, b: int) -> int:
        if a == b:
            raise SameEntity(f"entity {a} merged with itself")
        if a not in self._members or b not in self._members:
            raise KeyError(f"unknown entity {a if a not in self._members else b}")
        keep, drop = (a, b) if a < b else (b, a)
        self._parent[drop] = keep
        merged = sorted(self._members[keep] + self._members.pop(drop))
        self._members[keep] = merged
        self._attrs[keep] = self._attrs[keep].union(self._attrs.pop(drop))
        return keep

    def partition(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(v) for v in self._members.values())


def merge_entities(store: EntityStore, a: int, b: int) -> int:
    return store.merge(a, b)


# --------------------------------------------------------------------------
# mention selection and candidate ordering


def select_active_mentions(store: EntityStore) -> list[int]:
    """First mention of every partial entity, skipping the document's first mention."""
    firsts = sorted(store.members(e)[0] for e in store.entity_ids)
    return [m for m in firsts if m != 0]


def _contains(outer: Mention, inner: Mention) -> bool:
    return outer.start <= inner.start and inner.end <= outer.end


def candidate_mentions(m: Mention, mentions: Sequence[Mention], window: int | None) -> list[Mention]:
    """Mentions preceding ``m`` within ``window`` sentences, best candidate first.

    Same-sentence mentions come first, nearest to the left first; then each
    earlier sentence in turn, again nearest-first within the sentence.
    """
    out = []
    for i in range(m.id - 1, -1, -1):
        c = mentions[i]
        if window is not None and m.sent - c.sent > window:
            break
        if _contains(c, m):
            continue
        out.append(c)
    out.sort(key=lambda c: (m.sent - c.sent, m.start - c.start, c.id))
    return out


def order_candidates(m: Mention, store: EntityStore, window: int | None) -> list[int]:
    """Candidate entity ids for ``m`` ranked by their best-ranked member mention."""
    seen: list[int] = []
    own = store.find(m.id)
    for c in candidate_mentions(m, store.mentions, window):
        e = store.find(c.id)
        if e != own and e not in seen:
            seen.append(e)
    return seen


# --------------------------------------------------------------------------
# sieves


def _lower(forms: Sequence[str]) -> tuple[str, ...]:
    return tuple(f.lower() for f in forms)


def _is_subsequence(short: Sequence[str], long: Sequence[str]) -> bool:
    it = iter(long)
    return all(any(x == y for y in it) for x in short)


def _is_contiguous(short: Sequence[str], long: Sequence[str]) -> bool:
    n = len(short)
    return any(tuple(long[i : i + n]) == tuple(short) for i in range(len(long) - n + 1))


def _walk(
    store: EntityStore,
    window: int | None,
    active_ok: Callable[[Mention], bool],
    match: Callable[[Mention, Mention], bool],
) -> None:
    """Link each active mention to the first qualifying earlier mention."""
    mentions = store.mentions
    for mid in select_active_mentions(store):
        m = mentions[mid]
        own = store.find(mid)
        if store.members(own)[0] != mid or not active_ok(m):
            continue
        for c in candidate_mentions(m, mentions, window):
            other = store.find(c.id)
            if other == own or c.is_pronoun:
                continue
            if match(m, c):
                store.merge(own, other)
                break


def _not_pronoun(m: Mention) -> bool:
    return not m.is_pronoun


def sieve_speaker(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = None) -> None:
    """Merge first/second-person pronouns inside a quotation with its speaker."""
    inside = quoted_positions(doc)
    if not inside:
        return
    mentions = store.mentions
    by_sent: dict[int, list[Mention]] = {}
    for m in mentions:
        by_sent.setdefault(m.sent, []).append(m)
    for sent in doc.sentences:
        base = doc.sentence_offsets[sent.index]
        verbs = [
            base + i for i, t in enumerate(sent.tokens)
            if base + i not in inside and (t.lemma.lower() in lex.quote_verbs or t.form.lower() in lex.quote_verbs)
        ]
        if not verbs:
            continue
        here = by_sent.get(sent.index, [])
        outside = [m for m in here if m.start not in inside and m.end not in inside]
        quoted = [m for m in here if m.is_pronoun and m.start in inside and m.attrs.person & {FIRST, SECOND}]
        if not outside or not quoted:
            continue
        verb = verbs[0]

        def dist(m: Mention) -> tuple[int, int, int]:
            d = verb - m.end if m.end < verb else m.start - verb
            # ties: the preceding (subject-side) mention, the wider span
            return (d, 0 if m.end < verb else 1, -len(m))

        speaker = min(outside, key=dist)
        for p in quoted:
            a, b = store.find(speaker.id), store.find(p.id)
            if a != b:
                store.merge(a, b)


def sieve_exact_match(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = None) -> None:
    _walk(store, window, _not_pronoun, lambda m, c: m.forms == c.forms)


def sieve_strict_head(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = 3) -> None:
    def match(m: Mention, c: Mention) -> bool:
        if m.head_form.lower() != c.head_form.lower():
            return False
        a, b = _lower(m.forms), _lower(c.forms)
        short, long = (a, b) if len(a) <= len(b) else (b, a)
        return _is_subsequence(short, long)

    _walk(store, window, _not_pronoun, match)


def _proper_tokens(m: Mention, doc: Document, lex: Lexicons) -> frozenset[str]:
    toks = doc.tokens[m.start : m.end + 1]
    return frozenset(t.form.lower() for t in toks if t.pos_fine in lex.tags.proper)


def sieve_proper_name(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = None) -> None:
    proper = lex.tags.proper

    def match(m: Mention, c: Mention) -> bool:
        if doc.tokens[m.head_token].pos_fine not in proper or doc.tokens[c.head_token].pos_fine not in proper:
            return False
        if m.head_form.lower() != c.head_form.lower():
            return False
        a, b = _proper_tokens(m, doc, lex), _proper_tokens(c, doc, lex)
        return a <= b or b <= a

    _walk(store, window, _not_pronoun, match)


def sieve_location(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = 3) -> None:
    def match(m: Mention, c: Mention) -> bool:
        if m.ner not in LOCATION_NER or c.ner not in LOCATION_NER:
            return False
        a, b = _lower(m.forms), _lower(c.forms)
        short, long = (a, b) if len(a) <= len(b) else (b, a)
        return _is_contiguous(short, long)

    _walk(store, window, _not_pronoun, match)


def sieve_title(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = 0) -> None:
    tags = lex.tags

    def is_title(m: Mention) -> bool:
        h = doc.tokens[m.head_token]
        return m.ner not in tags.person_ner and (h.lemma.lower() in lex.title_nouns or h.form.lower() in lex.title_nouns)

    def adjacent(first: Mention, second: Mention) -> bool:
        between = doc.tokens[first.end + 1 : second.start]
        return first.end < second.start and all(t.pos_coarse in tags.punctuation for t in between)

    def match(m: Mention, c: Mention) -> bool:
        if m.sent != c.sent or not adjacent(c, m):
            return False
        return (is_title(c) and m.ner in tags.person_ner) or (is_title(m) and c.ner in tags.person_ner)

    _walk(store, window, _not_pronoun, match)


def sieve_demonstrative(doc: Document, store: EntityStore, lex: Lexicons, window: int | None = 3) -> None:
    def active(m: Mention) -> bool:
        return m.kind is MentionKind.DEMONSTRATIVE

    def match(m: Mention, c: Mention) -> bool:
        return c.head_form.lower() == m.head_form.lower()

    _walk(store, window, active, match)


SIEVES: Mapping[str, Callable[..., None]] = {
    "speaker": sieve_speaker,
    "exact_match": sieve_exact_match,
    "strict_head": sieve_strict_head,
    "proper_name": sieve_proper_name,
    "location": sieve_location,
    "title": sieve_title,
    "demonstrative": sieve_demonstrative,
}
DEFAULT_ORDER = tuple(SIEVES)
GLOBAL_SIEVES = frozenset({"exact_match", "proper_name"})


@dataclass(frozen=True)
class SieveConfig:
    order: tuple[str, ...] = DEFAULT_ORDER
    sentence_window: int = 3
    disabled: frozenset[str] = frozenset()
    # per-sieve window overrides; None means document-global
    windows: Mapping[str, int | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.sentence_window < 1:
            raise ValueError("sentence_window must be positive")
        for name in (*self.order, *self.disabled, *self.windows):
            if name not in SIEVES:
                raise UnknownSieveName(name)
        if len(set(self.order)) != len(self.order):
            raise ValueError("sieve order repeats a name")

    @property
    def enabled(self) -> dict[str, bool]:
        return {name: name in self.order and name not in self.disabled for name in SIEVES}

    @property
    def active_order(self) -> tuple[str, ...]:
        return tuple(s for s in self.order if s not in self.disabled)

    def window_for(self, name: str) -> int | None:
        if name in self.windows:
            return self.windows[name]
        if name in GLOBAL_SIEVES:
            return None
        if name == "title":
            return 0
        return self.sentence_window

    @classmethod
    def none(cls, sentence_window: int = 3) -> "SieveConfig":
        return cls(order=(), sentence_window=sentence_window)


def run_pipeline(
    doc: Document,
    mentions: Sequence[Mention],
    cfg: SieveConfig,
    lex: Lexicons,
    store: EntityStore | None = None,
) -> EntityStore:
    """Apply the configured sieves in order; ``store`` seeds the partition if given."""
    for name in cfg.order:
        if name not in SIEVES:
            raise UnknownSieveName(name)
    store = store.copy() if store is not None else EntityStore(mentions)
    for name in cfg.active_order:
        SIEVES[name](doc, store, lex, cfg.window_for(name))
    return store
