import numpy as np
import pytest

from hybridcoref.errors import ConfigError, MissingGold
from hybridcoref.features import Mode
from hybridcoref.learner import GridPoint
from hybridcoref.resolver import (
    LINKED, NON_ANAPHORIC, OracleScorer, Policy, Resolution, ResolverConfig, RuleScorer, Setting, dump_predictions,
    evaluate, format_report, gold_anaphoric, load_predictions, prepare_document, resolve_prepared, run_setting,
    standard_matrix, with_threshold,
)
from hybridcoref.sieves import SieveConfig, order_candidates
from hybridcoref.synth import ABLATION_SPEC, SynthSpec, gen_corpus

from helpers import DOT, build_doc, mention_at
from oracles import gold_of


class FixedScorer:
    """Returns preset scores in candidate order and records what it was asked."""

    def __init__(self, scores):
        self.scores = list(scores)
        self.calls = []

    def score(self, pron, candidates, store, prep):
        self.calls.append(list(candidates))
        return np.array(self.scores[: len(candidates)])


def _three_candidates(lex):
    doc = build_doc([
        ["Ali/N/NNP/B-PER/B-NP", "met/V/VBD/O/B-VP", "Reza/N/NNP/B-PER/B-NP", "and/C/CC/O/O",
         "Omid/N/NNP/B-PER/B-NP", DOT],
        ["he/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT],
    ], marks=[(0, 0, 0, 1), (0, 2, 2, 2), (0, 4, 4, 3), (1, 0, 0, 2)])
    return doc, prepare_document(doc, lex, SieveConfig.none())


def test_best_scoring_candidate_wins(lex):
    doc, prep = _three_candidates(lex)
    # candidates nearest first: Omid, Reza, Ali
    scorer = FixedScorer([0.3, 0.7, 0.6])
    store, [r] = resolve_prepared(prep, scorer, ResolverConfig())
    assert r.status == LINKED and r.score == 0.7
    assert r.antecedent_spans == ((0, 2, 2),)
    assert store.find(mention_at(prep.mentions, (1, 0, 0)).id) == store.find(mention_at(prep.mentions, (0, 2, 2)).id)


def test_below_threshold_is_non_anaphoric(lex):
    doc, prep = _three_candidates(lex)
    store, [r] = resolve_prepared(prep, FixedScorer([0.3, 0.49, 0.1]), ResolverConfig())
    assert r.status == NON_ANAPHORIC and r.score == 0.49 and r.antecedent_entity is None
    assert len(store) == len(prep.mentions)


def test_ties_go_to_the_nearest(lex):
    doc, prep = _three_candidates(lex)
    _, [r] = resolve_prepared(prep, FixedScorer([0.8, 0.8, 0.8]), ResolverConfig())
    assert r.antecedent_spans == ((0, 4, 4),)


def test_threshold_one_disables_linking(lex):
    doc, prep = _three_candidates(lex)
    _, [r] = resolve_prepared(prep, FixedScorer([1.0, 1.0, 1.0]), ResolverConfig(merge_threshold=1.0))
    assert r.status == NON_ANAPHORIC


def test_pronoun_without_candidates(lex):
    doc = build_doc([["he/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT]])
    prep = prepare_document(doc, lex, SieveConfig())
    scorer = FixedScorer([1.0])
    _, [r] = resolve_prepared(prep, scorer, ResolverConfig())
    assert r.status == NON_ANAPHORIC and scorer.calls == []


def test_window_limits_candidates(lex):
    filler = [["x/N/NN/O/B-NP", DOT]] * 3
    doc = build_doc([["Ali/N/NNP/B-PER/B-NP", DOT], *filler, ["he/PRO/PRP/O/B-NP", DOT]])
    prep = prepare_document(doc, lex, SieveConfig.none())
    scorer = FixedScorer([0.9] * 10)
    resolve_prepared(prep, scorer, ResolverConfig(sentence_window=3))
    seen = {prep.mentions[e].sent for e in scorer.calls[0]}
    assert seen == {1, 2, 3}
    scorer = FixedScorer([0.9] * 10)
    resolve_prepared(prep, scorer, ResolverConfig(sentence_window=4))
    assert 0 in {prep.mentions[e].sent for e in scorer.calls[0]}


def test_class_window_override(lex):
    doc = build_doc([["Ali/N/NNP/B-PER/B-NP", DOT], ["x/N/NN/O/B-NP", DOT], ["he/PRO/PRP/O/B-NP", DOT]])
    prep = prepare_document(doc, lex, SieveConfig.none())
    scorer = FixedScorer([0.9] * 10)
    resolve_prepared(prep, scorer, ResolverConfig(class_windows={"Personal": 1}))
    assert {prep.mentions[e].sent for e in scorer.calls[0]} == {1}


def test_config_validation():
    with pytest.raises(ConfigError):
        ResolverConfig(merge_threshold=1.5)
    with pytest.raises(ConfigError):
        ResolverConfig(sentence_window=0)
    with pytest.raises(ConfigError):
        Setting("x", classifier="svm")


def _two_pronoun_doc():
    return build_doc([
        ["Ali/N/NNP/B-PER/B-NP", "arrived/V/VBD/O/B-VP", DOT],
        ["he/PRO/PRP/O/B-NP", "sat/V/VBD/O/B-VP", DOT],
        ["he/PRO/PRP/O/B-NP", "slept/V/VBD/O/B-VP", DOT],
    ], marks=[(0, 0, 0, 1), (1, 0, 0, 1), (2, 0, 0, 1)])


def test_later_pronoun_sees_grown_entity(lex):
    doc = _two_pronoun_doc()
    prep = prepare_document(doc, lex, SieveConfig())
    store, res = resolve_prepared(prep, RuleScorer(), ResolverConfig())
    assert [r.status for r in res] == [LINKED, LINKED]
    assert res[1].antecedent_spans == ((0, 0, 0), (1, 0, 0))
    assert len(store.partition()) == 1
    assert evaluate([doc], {doc.doc_id: res}).f1 == 1.0


def test_rule_scorer_respects_agreement(lex):
    doc = build_doc([
        ["Sara/N/NNP/B-PER/B-NP", "saw/V/VBD/O/B-VP", "books/N/NNS/O/B-NP", DOT],
        ["he/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT],
    ])
    prep = prepare_document(doc, lex, SieveConfig())
    cands = order_candidates(prep.mentions[-1], prep.store, 3)
    scores = RuleScorer().score(prep.mentions[-1], cands, prep.store, prep)
    # "books" is plural, so only Sara agrees in number
    assert list(scores) == [0.0, 1.0]


def test_original_store_untouched(lex):
    doc = _two_pronoun_doc()
    prep = prepare_document(doc, lex, SieveConfig.none())
    before = prep.store.partition()
    resolve_prepared(prep, RuleScorer(), ResolverConfig())
    assert prep.store.partition() == before


# ---------------------------------------------------------------------------
# evaluation arithmetic


def _eval_doc():
    # chain 1: Ali, he(s1), he(s3); chain 2: the box, it(s2); "it" in s4 is pleonastic
    doc = build_doc([
        ["Ali/N/NNP/B-PER/B-NP", "found/V/VBD/O/B-VP", "the/DET/DT/O/B-NP", "box/N/NN/O/I-NP", DOT],
        ["he/PRO/PRP/O/B-NP", "smiled/V/VBD/O/B-VP", DOT],
        ["it/PRO/PRP/O/B-NP", "was/V/VBD/O/B-VP", "red/ADJ/JJ/O/B-ADJP", DOT],
        ["he/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT],
        ["it/PRO/PRP/O/B-NP", "rained/V/VBD/O/B-VP", DOT],
    ], marks=[(0, 0, 0, 1), (1, 0, 0, 1), (3, 0, 0, 1), (0, 2, 3, 2), (2, 0, 0, 2), (4, 0, 0, 3)])
    return doc


def _res(i, span, status, ante=()):
    return Resolution(i, span, 0 if status == LINKED else None, 1.0, status, tuple(ante))


def test_precision_recall_arithmetic():
    doc = _eval_doc()
    preds = {doc.doc_id: [
        _res(0, (1, 0, 0), LINKED, [(0, 0, 0)]),   # correct
        _res(1, (2, 0, 0), LINKED, [(0, 0, 0)]),   # wrong chain
        _res(2, (3, 0, 0), NON_ANAPHORIC),          # missed
        _res(3, (4, 0, 0), LINKED, [(0, 2, 3)]),   # pleonastic, linked anyway
    ]}
    s = evaluate([doc], preds)
    assert (s.correct, s.linked, s.gold_anaphoric) == (1, 3, 3)
    assert s.precision == pytest.approx(1 / 3) and s.recall == pytest.approx(1 / 3)
    g = evaluate([doc], preds, Policy.GOLD_ANAPHORIC_ONLY)
    assert (g.correct, g.linked, g.gold_anaphoric) == (1, 2, 3)
    assert (g.precision, g.recall, g.f1) == pytest.approx((0.5, 1 / 3, 0.4))


def test_two_of_four_arithmetic():
    doc = _eval_doc()
    preds = {doc.doc_id: [
        _res(0, (1, 0, 0), LINKED, [(0, 0, 0)]),
        _res(1, (2, 0, 0), LINKED, [(0, 2, 3)]),
        _res(2, (3, 0, 0), LINKED, [(0, 2, 3)]),
        _res(3, (4, 0, 0), LINKED, [(0, 0, 0)]),
    ]}
    s = evaluate([doc], preds)
    assert s.precision == 0.5 and s.recall == pytest.approx(2 / 3)


def test_gold_anaphoric_definition():
    doc = _eval_doc()
    assert [gold_anaphoric(doc, s) for s in [(0, 0, 0), (1, 0, 0), (2, 0, 0), (4, 0, 0)]] == [False, True, True, False]


def test_evaluate_errors():
    doc = _eval_doc()
    with pytest.raises(MissingGold):
        evaluate([doc], {"other": []})
    bare = build_doc([["he/PRO/PRP/O/B-NP", DOT]])
    with pytest.raises(MissingGold):
        evaluate([bare], {})


def test_empty_predictions_score_zero():
    s = evaluate([_eval_doc()], {})
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0) and s.gold_anaphoric == 0


def _brute_force_score(docs, preds):
    correct = linked = ana = 0
    for d in docs:
        for r in preds.get(d.doc_id, []):
            mine = gold_of(d, r.pronoun_span)
            is_ana = any(s < r.pronoun_span for c in d.gold_chains if c.chain_id in mine for s in c.spans)
            ana += is_ana
            if r.status == LINKED:
                linked += 1
                correct += any(gold_of(d, s) & mine for s in r.antecedent_spans)
    return correct, linked, ana


def test_scores_match_brute_force_count(lex):
    docs = gen_corpus(SynthSpec(), 10, seed=2)
    preds = {}
    for d in docs:
        prep = prepare_document(d, lex, SieveConfig())
        preds[d.doc_id] = resolve_prepared(prep, RuleScorer(), ResolverConfig())[1]
    s = evaluate(docs, preds)
    assert (s.correct, s.linked, s.gold_anaphoric) == _brute_force_score(docs, preds)


def test_oracle_scorer_is_perfect_on_anaphoric_pronouns(lex):
    docs = gen_corpus(SynthSpec(), 15, seed=4)
    preds = {}
    for d in docs:
        prep = prepare_document(d, lex, SieveConfig())
        preds[d.doc_id] = resolve_prepared(prep, OracleScorer(), ResolverConfig())[1]
    assert evaluate(docs, preds, Policy.GOLD_ANAPHORIC_ONLY).f1 == 1.0


# ---------------------------------------------------------------------------
# prediction dump and reports


def test_dump_round_trip():
    doc = _eval_doc()
    preds = {doc.doc_id: [
        _res(0, (1, 0, 0), LINKED, [(0, 0, 0), (0, 2, 3)]),
        Resolution(1, (2, 0, 0), None, 0.25, NON_ANAPHORIC),
    ]}
    text = dump_predictions(preds)
    again = load_predictions(text)
    assert dump_predictions(again) == text
    assert evaluate([doc], again) == evaluate([doc], preds)


def test_dump_rejects_bad_lines():
    with pytest.raises(ConfigError):
        load_predictions("d\t0:0-0\tLinked\n")
    with pytest.raises(ConfigError):
        load_predictions("d\t0:0-0\tMaybe\t0.5\t-\tmodel\n")


def test_format_report():
    from hybridcoref.resolver import Score

    text = format_report([("hybrid", Score(0.5, 0.25, 1 / 3, 1, 2, 4))])
    assert "50.00" in text and "25.00" in text and "33.33" in text


# ---------------------------------------------------------------------------
# end to end


def test_run_setting_smoke(lex):
    docs = gen_corpus(ABLATION_SPEC, 30, seed=1)
    s = Setting("hybrid", point=GridPoint(None, 5))
    score, preds = run_setting(s, docs[:20], docs[20:], lex, seed=0)
    assert 0.0 < score.f1 <= 1.0
    assert set(preds) == {d.doc_id for d in docs[20:]}


def test_threshold_sweep_monotone(lex):
    docs = gen_corpus(ABLATION_SPEC, 30, seed=3)
    base = Setting("hybrid", point=GridPoint(None, 5))
    counts = []
    for t in (0.0, 0.2, 0.5, 0.8, 1.0):
        _, preds = run_setting(with_threshold(base, t), docs[:20], docs[20:], lex, seed=0)
        counts.append(sum(r.linked and not r.by_rule for rs in preds.values() for r in rs))
    assert counts == sorted(counts, reverse=True) and counts[-1] == 0


def test_standard_matrix_rows():
    names = [s.name for s in standard_matrix()]
    assert names[:3] == ["rule-only", "mention-pair", "hybrid"]
    mp = standard_matrix()[1]
    assert mp.mode is Mode.MENTION_PAIR and not mp.rule_sieves
    assert "hybrid-embeddings" in [s.name for s in standard_matrix(embeddings=True)]
