"""The learned pronoun sieve, end-to-end resolution, scoring and ablations.

Resolution is entity-centric: rule sieves first build partial entities, then
each remaining pronoun is scored against the partial entities that precede it
within its sentence window. A link merges the pronoun into the chosen entity
before the next pronoun is considered, so later pronouns see the grown entity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .corpus import Document, Span
from .errors import ConfigError, MissingGold
from .features import EmbeddingTable, FeatureExtractor, FeatureSpace, Mode
from .learner.forest import GridPoint, check_mode, train_forest, train_logistic
from .learner.sampling import PreparedDocument, build_training_set, labels
from .learner.selection import prf
from .mentions import DetectionMode, Lexicons, Mention, detect_mentions
from .sieves import EntityStore, SieveConfig, order_candidates, run_pipeline

LINKED = "Linked"
NON_ANAPHORIC = "NonAnaphoric"


class Policy(enum.Enum):
    ALL_PRONOUNS = "all"
    GOLD_ANAPHORIC_ONLY = "gold-anaphoric"


@dataclass(frozen=True)
class ResolverConfig:
    merge_threshold: float = 0.5
    sentence_window: int = 3
    # keyed by pronoun class value ("Personal", "Demonstrative", "Reflexive")
    class_windows: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.merge_threshold <= 1.0:
            raise ConfigError("merge_threshold must lie in [0, 1]")
        if self.sentence_window < 1 or any(w < 1 for w in self.class_windows.values()):
            raise ConfigError("sentence windows must be positive")

    def window_for(self, pron: Mention) -> int:
        if pron.pronoun_class is not None:
            return self.class_windows.get(pron.pronoun_class.value, self.sentence_window)
        return self.sentence_window


@dataclass(frozen=True)
class Resolution:
    pronoun: int
    pronoun_span: Span
    antecedent_entity: int | None
    score: float
    status: str
    # spans of the antecedent entity's other members when the link was made
    antecedent_spans: tuple[Span, ...] = ()
    by_rule: bool = False

    @property
    def linked(self) -> bool:
        return self.status == LINKED


# --------------------------------------------------------------------------
# scorers


class Scorer(Protocol):
    def score(self, pron: Mention, candidates: Sequence[int], store: EntityStore,
              prep: PreparedDocument) -> np.ndarray: ...


class ModelScorer:
    """Link probabilities from a trained forest or logistic model."""

    def __init__(self, model, mode: Mode):
        check_mode(model, mode)
        self.model = model
        self.mode = mode

    def score(self, pron, candidates, store, prep):
        if not candidates:
            return np.zeros(0)
        vectors = [prep.extractor.extract(pron, e, store, self.mode) for e in candidates]
        return self.model.predict_vectors(vectors)


def _compatible(a: frozenset[str], b: frozenset[str]) -> bool:
    return not a or not b or bool(a & b)


class RuleScorer:
    """Deterministic agreement filter: 1.0 when number, animacy and person do not clash.

    Unknown (empty) attribute sets count as compatible; non-pronoun mentions
    are taken to be third person. Combined with nearest-first tie breaking
    this links to the closest agreeing entity.
    """

    def score(self, pron, candidates, store, prep):
        out = np.zeros(len(candidates))
        pa = pron.attrs
        for i, e in enumerate(candidates):
            ea = store.attrs(e)
            person = frozenset().union(*(prep.extractor._person(prep.mentions[m]) for m in store.members(e)))
            if (_compatible(pa.number, ea.number) and _compatible(pa.animacy, ea.animacy)
                    and _compatible(pa.person, person)):
                out[i] = 1.0
        return out


class OracleScorer:
    """1.0 exactly for candidates holding a mention of the pronoun's gold chain."""

    def score(self, pron, candidates, store, prep):
        gold = prep.gold_chains(pron)
        return np.array([
            1.0 if any(prep.gold_chains(prep.mentions[m]) & gold for m in store.members(e)) else 0.0
            for e in candidates
        ])


# --------------------------------------------------------------------------
# resolution


def prepare_document(
    doc: Document,
    lex: Lexicons,
    sieve_cfg: SieveConfig,
    table: EmbeddingTable | None = None,
    gold_clusters: bool = False,
) -> PreparedDocument:
    """Detect mentions and build partial entities.

    With ``gold_clusters`` the non-pronoun mentions are first grouped by their
    gold chains, so entity-level features come from gold rather than sieve
    clusters; the configured sieves still run on top (the speaker sieve is
    the only one that then changes anything).
    """
    mentions = detect_mentions(doc, lex, DetectionMode.FROM_ANNOTATIONS)
    seed = None
    if gold_clusters:
        groups: dict[int, list[int]] = {}
        for m in mentions:
            if m.is_pronoun:
                continue
            for c in doc.chain_of_span.get(m.span, ()):
                groups.setdefault(c, []).append(m.id)
        seed = EntityStore.from_groups(mentions, groups.values())
    store = run_pipeline(doc, mentions, sieve_cfg, lex, seed)
    return PreparedDocument(doc, mentions, store, FeatureExtractor(doc, mentions, lex, table))


def _other_spans(store: EntityStore, eid: int, pron: Mention) -> tuple[Span, ...]:
    return tuple(store.mentions[m].span for m in store.members(eid) if m != pron.id)


def resolve_pronoun(
    pron: Mention,
    store: EntityStore,
    scorer: Scorer,
    cfg: ResolverConfig,
    prep: PreparedDocument,
) -> Resolution:
    """Score every preceding entity in the window; link the best if it clears the threshold."""
    candidates = order_candidates(pron, store, cfg.window_for(pron))
    if not candidates:
        return Resolution(pron.id, pron.span, None, 0.0, NON_ANAPHORIC)
    scores = np.asarray(scorer.score(pron, candidates, store, prep), dtype=np.float64)
    # argmax returns the first maximum, and candidates are nearest-first
    best = int(np.argmax(scores))
    score = float(scores[best])
    # a threshold of 1.0 switches the learned sieve off; forests with pure
    # leaves can score exactly 1.0, which would otherwise still link
    if score < cfg.merge_threshold or cfg.merge_threshold >= 1.0:
        return Resolution(pron.id, pron.span, None, score, NON_ANAPHORIC)
    eid = candidates[best]
    spans = _other_spans(store, eid, pron)
    merged = store.merge(store.find(pron.id), eid)
    return Resolution(pron.id, pron.span, merged, score, LINKED, spans)


def resolve_prepared(prep: PreparedDocument, scorer: Scorer, cfg: ResolverConfig) -> tuple[EntityStore, list[Resolution]]:
    store = prep.store.copy()
    out = []
    for pron in prep.mentions:
        if not pron.is_pronoun:
            continue
        eid = store.find(pron.id)
        if any(m < pron.id for m in store.members(eid)):
            out.append(Resolution(pron.id, pron.span, eid, 1.0, LINKED, _other_spans(store, eid, pron), True))
            continue
        out.append(resolve_pronoun(pron, store, scorer, cfg, prep))
    return store, out


def resolve_document(
    doc: Document,
    sieve_cfg: SieveConfig,
    res_cfg: ResolverConfig,
    scorer: Scorer,
    lex: Lexicons,
    table: EmbeddingTable | None = None,
    gold_clusters: bool = False,
) -> tuple[EntityStore, list[Resolution]]:
    prep = prepare_document(doc, lex, sieve_cfg, table, gold_clusters)
    return resolve_prepared(prep, scorer, res_cfg)


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    correct: int
    linked: int
    gold_anaphoric: int


def gold_anaphoric(doc: Document, span: Span) -> bool:
    """True when the pronoun's gold chain has another mention before it."""
    chains = doc.chain_of_span.get(span, set())
    return any(s < span for c in doc.gold_chains if c.chain_id in chains for s in c.spans)


def is_correct(doc: Document, r: Resolution) -> bool:
    if not r.linked:
        return False
    gold = doc.chain_of_span.get(r.pronoun_span, set())
    return any(doc.chain_of_span.get(s, set()) & gold for s in r.antecedent_spans)


def evaluate(
    docs: Sequence[Document],
    predictions: Mapping[str, Sequence[Resolution]],
    policy: Policy = Policy.ALL_PRONOUNS,
) -> Score:
    """Pronoun-level precision, recall and F1 over a corpus.

    Precision divides by the number of Linked pronouns and recall by the number
    of gold-anaphoric pronouns; under ``GOLD_ANAPHORIC_ONLY`` pronouns without
    a gold antecedent are dropped from both counts.
    """
    by_id = {d.doc_id: d for d in docs}
    missing = set(predictions) - set(by_id)
    if missing:
        raise MissingGold(f"no gold document for {sorted(missing)[0]!r}")
    if docs and not any(d.gold_chains for d in docs):
        raise MissingGold("gold documents carry no coreference chains")
    correct = linked = anaphoric = 0
    for doc_id, doc in by_id.items():
        preds = {r.pronoun_span: r for r in predictions.get(doc_id, ())}
        pron_spans = set(preds)
        for span in pron_spans:
            r = preds[span]
            ana = gold_anaphoric(doc, span)
            if policy is Policy.GOLD_ANAPHORIC_ONLY and not ana:
                continue
            anaphoric += ana
            if r.linked:
                linked += 1
                correct += is_correct(doc, r)
    p, r, f = prf(correct, linked - correct, anaphoric - correct)
    return Score(p, r, f, correct, linked, anaphoric)


def format_report(rows: Sequence[tuple[str, Score]]) -> str:
    width = max([len("setting")] + [len(n) for n, _ in rows])
    lines = [f"{'setting':<{width}}  {'precision':>9}  {'recall':>9}  {'F1':>9}"]
    for name, s in rows:
        lines.append(f"{name:<{width}}  {100 * s.precision:9.2f}  {100 * s.recall:9.2f}  {100 * s.f1:9.2f}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# prediction dump


def _span_str(span: Span) -> str:
    return f"{span[0]}:{span[1]}-{span[2]}"


def _parse_span(text: str) -> Span:
    s, rest = text.split(":")
    a, b = rest.split("-")
    return int(s), int(a), int(b)


def dump_predictions(predictions: Mapping[str, Sequence[Resolution]]) -> str:
    """Tab-separated lines: doc, pronoun span, status, score, antecedent spans, source."""
    lines = ["#doc\tpronoun\tstatus\tscore\tantecedent\tsource"]
    for doc_id in sorted(predictions):
        for r in predictions[doc_id]:
            ante = ";".join(_span_str(s) for s in r.antecedent_spans) or "-"
            lines.append("\t".join([
                doc_id, _span_str(r.pronoun_span), r.status, repr(r.score), ante,
                "rule" if r.by_rule else "model",
            ]))
    return "\n".join(lines) + "\n"


def load_predictions(text: str) -> dict[str, list[Resolution]]:
    out: dict[str, list[Resolution]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ConfigError(f"prediction line {lineno}: expected 6 fields, got {len(parts)}")
        doc_id, span, status, score, ante, source = parts
        if status not in (LINKED, NON_ANAPHORIC):
            raise ConfigError(f"prediction line {lineno}: unknown status {status!r}")
        spans = () if ante == "-" else tuple(_parse_span(s) for s in ante.split(";"))
        preds = out.setdefault(doc_id, [])
        preds.append(Resolution(len(preds), _parse_span(span), None, float(score), status, spans,
                                source == "rule"))
    return out


# --------------------------------------------------------------------------
# training and ablations


FOREST, LOGISTIC, RULES = "forest", "logistic", "rules"


@dataclass(frozen=True)
class Setting:
    """One row of an ablation matrix."""

    name: str
    mode: Mode = Mode.HYBRID
    classifier: str = FOREST
    rule_sieves: bool = True
    gold_clusters: bool = False
    embeddings: bool = False
    sieve_order: tuple[str, ...] | None = None
    point: GridPoint = GridPoint(None, 100, "gini")
    merge_threshold: float = 0.5
    sentence_window: int = 3

    def __post_init__(self) -> None:
        if self.classifier not in (FOREST, LOGISTIC, RULES):
            raise ConfigError(f"unknown classifier {self.classifier!r}")

    def sieve_config(self) -> SieveConfig:
        if not self.rule_sieves:
            return SieveConfig.none(self.sentence_window)
        if self.sieve_order is not None:
            return SieveConfig(order=tuple(self.sieve_order), sentence_window=self.sentence_window)
        return SieveConfig(sentence_window=self.sentence_window)

    def resolver_config(self) -> ResolverConfig:
        return ResolverConfig(self.merge_threshold, self.sentence_window)


def prepare_corpus(docs: Iterable[Document], setting: Setting, lex: Lexicons,
                   table: EmbeddingTable | None = None) -> list[PreparedDocument]:
    cfg = setting.sieve_config()
    tab = table if setting.embeddings else None
    return [prepare_document(d, lex, cfg, tab, setting.gold_clusters) for d in docs]


def train_model(preps: Sequence[PreparedDocument], setting: Setting, seed: int = 0,
                embedding_dim: int = 0):
    """Fit the classifier of ``setting`` on prepared training documents."""
    examples = build_training_set(preps, setting.mode)
    dim = embedding_dim if setting.embeddings else 0
    space = FeatureSpace(setting.mode, dim).fit(e.features for e in examples)
    X = space.transform([e.features for e in examples])
    y = labels(examples)
    if setting.classifier == LOGISTIC:
        return train_logistic(X, y, space, seed=seed, merge_threshold=setting.merge_threshold)
    return train_forest(X, y, setting.point, space, seed, setting.merge_threshold)


def make_scorer(setting: Setting, model=None) -> Scorer:
    if setting.classifier == RULES:
        return RuleScorer()
    if model is None:
        raise ConfigError(f"setting {setting.name!r} needs a trained model")
    return ModelScorer(model, setting.mode)


@dataclass
class AblationRow:
    setting: Setting
    score: Score


def run_setting(
    setting: Setting,
    train_docs: Sequence[Document],
    test_docs: Sequence[Document],
    lex: Lexicons,
    seed: int = 0,
    table: EmbeddingTable | None = None,
    policy: Policy = Policy.ALL_PRONOUNS,
) -> tuple[Score, dict[str, list[Resolution]]]:
    model = None
    if setting.classifier != RULES:
        dim = table.dim if (table is not None and setting.embeddings) else 0
        model = train_model(prepare_corpus(train_docs, setting, lex, table), setting, seed, dim)
    scorer = make_scorer(setting, model)
    cfg = setting.resolver_config()
    preds = {}
    for prep in prepare_corpus(test_docs, setting, lex, table):
        preds[prep.doc_id] = resolve_prepared(prep, scorer, cfg)[1]
    return evaluate(test_docs, preds, policy), preds


def ablation_run(
    matrix: Sequence[Setting],
    train_docs: Sequence[Document],
    test_docs: Sequence[Document],
    lex: Lexicons,
    seed: int = 0,
    table: EmbeddingTable | None = None,
    policy: Policy = Policy.ALL_PRONOUNS,
) -> list[AblationRow]:
    """Train and evaluate every setting end to end on the same split."""
    return [AblationRow(s, run_setting(s, train_docs, test_docs, lex, seed, table, policy)[0]) for s in matrix]


def standard_matrix(point: GridPoint = GridPoint(None, 100, "gini"), embeddings: bool = False) -> list[Setting]:
    """The usual comparison rows: rule baseline, mention-pair, hybrid and its variants."""
    rows = [
        Setting("rule-only", classifier=RULES),
        Setting("mention-pair", mode=Mode.MENTION_PAIR, rule_sieves=False, point=point),
        Setting("hybrid", point=point),
        Setting("hybrid-gold-clusters", gold_clusters=True, point=point),
        Setting("hybrid-no-rule-sieves", rule_sieves=False, point=point),
        Setting("hybrid-reversed-sieves", sieve_order=tuple(reversed(SieveConfig().order)), point=point),
        Setting("hybrid-logistic", classifier=LOGISTIC, point=point),
    ]
    if embeddings:
        rows.append(Setting("hybrid-embeddings", embeddings=True, point=point))
    return rows


def with_threshold(setting: Setting, threshold: float) -> Setting:
    return replace(setting, merge_threshold=threshold)
