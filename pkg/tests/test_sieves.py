import itertools

import numpy as np
import pytest

from hybridcoref.errors import SameEntity, UnknownSieveName
from hybridcoref.mentions import (
    PLURAL, SINGULAR, AttributeLattice, Mention, MentionKind, detect_mentions,
)
from hybridcoref.sieves import (
    DEFAULT_ORDER, SIEVES, EntityStore, SieveConfig, candidate_mentions, merge_entities,
    order_candidates, run_pipeline, select_active_mentions,
)
from hybridcoref.synth import SynthSpec, gen_synthetic

from helpers import COMMA, DOT, THE, build_doc, mention_at
from sieve_fixtures import SIEVE_CASES


def _run(doc, lex, order=DEFAULT_ORDER, **kw):
    ms = detect_mentions(doc, lex)
    return ms, run_pipeline(doc, ms, SieveConfig(order=tuple(order), **kw), lex)


def _same(ms, store, a, b):
    return store.find(mention_at(ms, a).id) == store.find(mention_at(ms, b).id)


def _fake_mentions(n, sents=None, attrs=None):
    out = []
    for i in range(n):
        s = sents[i] if sents else 0
        out.append(Mention(i, (s, i, i), i, MentionKind.COMMON_NOUN,
                           attrs[i] if attrs else AttributeLattice(), start=i, end=i))
    return out


# ---------------------------------------------------------------------------
# worked examples


@pytest.mark.parametrize("case", SIEVE_CASES, ids=[c[0] for c in SIEVE_CASES])
def test_worked_example_alone(lex, case):
    name, sieve, sents, a, b, merged = case
    doc = build_doc(sents)
    order = (sieve,) if sieve else DEFAULT_ORDER
    ms, store = _run(doc, lex, order)
    assert _same(ms, store, a, b) is merged


@pytest.mark.parametrize("case", SIEVE_CASES, ids=[c[0] for c in SIEVE_CASES])
def test_worked_example_full_pipeline(lex, case):
    name, _, sents, a, b, merged = case
    ms, store = _run(build_doc(sents), lex)
    assert _same(ms, store, a, b) is merged


def test_washington_university_survives_each_sieve(lex):
    sents = SIEVE_CASES[-1][2]
    for sieve in SIEVES:
        ms, store = _run(build_doc(sents), lex, (sieve,))
        assert not _same(ms, store, (0, 0, 1), (1, 0, 1)), sieve


# ---------------------------------------------------------------------------
# pipeline


def test_no_sieves_gives_singletons(lex):
    doc = gen_synthetic(SynthSpec(), 3)
    ms, store = _run(doc, lex, ())
    assert len(store) == len(ms)


def test_identical_strings_share_entity(lex):
    doc = build_doc([
        ["Islamic/ADJ/JJ/B-ORG/B-NP", "Azad/N/NNP/I-ORG/I-NP", "University/N/NNP/I-ORG/I-NP", "grew/V/VBD/O/B-VP", DOT],
        ["filler/N/NN/O/B-NP", DOT], ["filler2/N/NN/O/B-NP", DOT], ["x/N/NN/O/B-NP", DOT], ["y/N/NN/O/B-NP", DOT],
        ["Islamic/ADJ/JJ/B-ORG/B-NP", "Azad/N/NNP/I-ORG/I-NP", "University/N/NNP/I-ORG/I-NP", "won/V/VBD/O/B-VP", DOT],
    ])
    ms, store = _run(doc, lex, ("exact_match",))
    # five sentences apart: exact match is not limited by the window
    assert _same(ms, store, (0, 0, 2), (5, 0, 2))


def test_affix_difference_blocks_exact_match(lex):
    doc = build_doc([["university/N/NN/O/B-NP", DOT], ["universities/N/NNS/O/B-NP", DOT]])
    ms, store = _run(doc, lex, ("exact_match",))
    assert not _same(ms, store, (0, 0, 0), (1, 0, 0))


def test_identical_pronouns_pass_through(lex):
    doc = build_doc([["he/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT], ["he/PRO/PRP/O/B-NP", "came/V/VBD/O/B-VP", DOT]])
    ms, store = _run(doc, lex)
    assert len(store) == len(ms)


def test_identical_single_nouns_merge_by_head(lex):
    doc = build_doc([["bridge/N/NN/O/B-NP", DOT], ["bridge/N/NN/O/B-NP", DOT]])
    ms, store = _run(doc, lex, ("strict_head",))
    assert _same(ms, store, (0, 0, 0), (1, 0, 0))


def test_different_heads_not_proper_merged(lex):
    doc = build_doc([["David/N/NNP/B-PER/B-NP", "Beckham/N/NNP/I-PER/I-NP", DOT],
                     ["David/N/NNP/B-PER/B-NP", "Smith/N/NNP/I-PER/I-NP", DOT]])
    ms, store = _run(doc, lex, ("proper_name",))
    assert not _same(ms, store, (0, 0, 1), (1, 0, 1))


def test_common_heads_not_proper_merged(lex):
    doc = build_doc([["bridge/N/NN/O/B-NP", DOT], ["bridge/N/NN/O/B-NP", DOT]])
    ms, store = _run(doc, lex, ("proper_name",))
    assert not _same(ms, store, (0, 0, 0), (1, 0, 0))


def test_location_needs_location_tags(lex):
    doc = build_doc([["Tehran/N/NNP/B-LOC/B-NP", DOT], ["Mashhad/N/NNP/B-LOC/B-NP", DOT],
                     ["Tehran/N/NNP/B-ORG/B-NP", DOT]])
    ms, store = _run(doc, lex, ("location",))
    assert len(store) == len(ms)


def test_title_needs_same_sentence_and_lexicon(lex):
    apart = build_doc([["President/N/NNP/O/B-NP", DOT], ["Emmanuel/N/NNP/B-PER/B-NP", "Macron/N/NNP/I-PER/I-NP", DOT]])
    ms, store = _run(apart, lex, ("title",))
    assert not _same(ms, store, (0, 0, 0), (1, 0, 1))
    unknown = build_doc([[THE, "gardener/N/NN/O/I-NP", COMMA, "Emmanuel/N/NNP/B-PER/B-NP", "Macron/N/NNP/I-PER/I-NP"]])
    ms, store = _run(unknown, lex, ("title",))
    assert not _same(ms, store, (0, 0, 1), (0, 3, 4))


def test_title_after_name(lex):
    doc = build_doc([["Ali/N/NNP/B-PER/B-NP", "Karimi/N/NNP/I-PER/I-NP", COMMA, THE, "coach/N/NN/O/I-NP", COMMA,
                      "left/V/VBD/O/B-VP", DOT]])
    ms, store = _run(doc, lex, ("title",))
    assert _same(ms, store, (0, 0, 1), (0, 3, 4))


def _demo_doc(gap):
    fill = [["x/N/NN/O/B-NP", DOT]] * (gap - 1)
    return build_doc([[THE, "flower/N/NN/O/I-NP", "exhibition/N/NN/O/I-NP", DOT], *fill,
                      ["this/DET/DT/O/B-NP", "exhibition/N/NN/O/I-NP", DOT]])


def test_demonstrative_window_boundary(lex):
    ms, store = _run(_demo_doc(3), lex, ("demonstrative",))
    assert _same(ms, store, (0, 0, 2), (3, 0, 1))
    ms, store = _run(_demo_doc(4), lex, ("demonstrative",))
    assert not _same(ms, store, (0, 0, 2), (4, 0, 1))


def test_demonstrative_without_antecedent(lex):
    doc = build_doc([["this/DET/DT/O/B-NP", "exhibition/N/NN/O/I-NP", DOT]])
    ms, store = _run(doc, lex, ("demonstrative",))
    assert len(store) == len(ms)


def _quote(verb="said/V/VBD/O/B-VP", pron="I/PRO/PRP/O/B-NP"):
    return build_doc([["Ali/N/NNP/B-PER/B-NP", verb, ":/PUNC/:/O/O", '"/PUNC/``/O/O', pron,
                       "will/V/MD/O/B-VP", "come/V/VB/O/I-VP", DOT, '"/PUNC/\'\'/O/O']])


def test_speaker_links_first_person(lex):
    ms, store = _run(_quote(), lex, ("speaker",))
    assert _same(ms, store, (0, 0, 0), (0, 4, 4))


def test_speaker_needs_reporting_verb(lex):
    ms, store = _run(_quote(verb="left/V/VBD/O/B-VP"), lex, ("speaker",))
    assert len(store) == len(ms)


def test_speaker_ignores_third_person_and_unquoted(lex):
    ms, store = _run(_quote(pron="he/PRO/PRP/O/B-NP"), lex, ("speaker",))
    assert len(store) == len(ms)
    doc = build_doc([["Ali/N/NNP/B-PER/B-NP", "said/V/VBD/O/B-VP", "I/PRO/PRP/O/B-NP", "left/V/VBD/O/B-VP", DOT]])
    ms, store = _run(doc, lex, ("speaker",))
    assert len(store) == len(ms)


def test_unknown_sieve_name():
    with pytest.raises(UnknownSieveName):
        SieveConfig(order=("exact_match", "telepathy"))


def test_reordering_is_deterministic(lex):
    doc = gen_synthetic(SynthSpec(entities=6, mentions=5), 11)
    rng = np.random.default_rng(0)
    for _ in range(5):
        order = tuple(rng.permutation(list(DEFAULT_ORDER)))
        a = _run(doc, lex, order)[1].partition()
        b = _run(doc, lex, order)[1].partition()
        assert a == b


def test_rule_merges_respect_windows(lex):
    for seed in range(20):
        doc = gen_synthetic(SynthSpec(entities=6, mentions=6), seed)
        ms = detect_mentions(doc, lex)
        for name in SIEVES:
            cfg = SieveConfig(order=(name,))
            store = run_pipeline(doc, ms, cfg, lex)
            w = cfg.window_for(name)
            if w is None:
                continue
            # each link spans at most w sentences, so a chain has no larger gap
            for e in store.entities:
                sents = sorted(ms[i].sent for i in e.mentions)
                assert all(b - a <= w for a, b in zip(sents, sents[1:])), name


def test_entity_count_never_grows(lex):
    doc = gen_synthetic(SynthSpec(entities=6, mentions=5), 5)
    ms = detect_mentions(doc, lex)
    counts = [len(ms)]
    for k in range(1, len(DEFAULT_ORDER) + 1):
        counts.append(len(run_pipeline(doc, ms, SieveConfig(order=DEFAULT_ORDER[:k]), lex)))
    assert counts == sorted(counts, reverse=True)


# ---------------------------------------------------------------------------
# store, active mentions, candidate order


def test_active_mentions_of_singletons():
    store = EntityStore(_fake_mentions(3))
    assert select_active_mentions(store) == [1, 2]


def test_active_mentions_running_example():
    # {m1,m5}{m2,m6}{m3}{m4} with zero-based ids
    store = EntityStore.from_groups(_fake_mentions(6), [[0, 4], [1, 5]])
    assert select_active_mentions(store) == [1, 2, 3]


def test_active_mentions_single_mention():
    assert select_active_mentions(EntityStore(_fake_mentions(1))) == []


def test_merge_unions_number():
    ms = _fake_mentions(2, attrs=[AttributeLattice.of(number=[SINGULAR]), AttributeLattice.of(number=[PLURAL])])
    store = EntityStore(ms)
    eid = merge_entities(store, 0, 1)
    assert store.attrs(eid).number == {SINGULAR, PLURAL}
    assert store.entity(eid).first_mention == 0


def test_merge_with_itself():
    store = EntityStore(_fake_mentions(2))
    with pytest.raises(SameEntity):
        store.merge(1, 1)


def test_merge_order_does_not_matter():
    for perm in itertools.permutations([(0, 1), (1, 2), (3, 4)]):
        store = EntityStore(_fake_mentions(5))
        for a, b in perm:
            ea, eb = store.find(a), store.find(b)
            if ea != eb:
                store.merge(ea, eb)
        assert store.partition() == frozenset({frozenset({0, 1, 2}), frozenset({3, 4})})
        assert store.entity_ids == [0, 3]


def test_window_excludes_distant_sentence():
    ms = _fake_mentions(5, sents=[0, 3, 4, 5, 5])
    m = ms[4]
    assert [c.id for c in candidate_mentions(m, ms, 3)] == [3, 2, 1]
    assert order_candidates(m, EntityStore(ms), 3) == [3, 2, 1]


def test_no_preceding_mentions():
    ms = _fake_mentions(2)
    assert order_candidates(ms[0], EntityStore(ms), 3) == []


def test_candidate_order_matches_comparator_sort(lex):
    doc = build_doc([
        ["a/N/NN/O/B-NP", "b/N/NN/O/B-NP", DOT],
        ["c/N/NN/O/B-NP", "x/V/VBD/O/B-VP", "d/N/NN/O/B-NP", "e/N/NN/O/B-NP", "f/N/NN/O/B-NP", "he/PRO/PRP/O/B-NP", DOT],
    ])
    ms = detect_mentions(doc, lex)
    pron = ms[-1]
    expected = sorted(ms[:-1], key=lambda c: (pron.sent - c.sent, pron.start - c.start))
    assert [c.id for c in candidate_mentions(pron, ms, 3)] == [c.id for c in expected]
    texts = [c.text for c in expected]
    assert texts == ["f", "e", "d", "c", "b", "a"]


def test_entity_ranked_by_best_member():
    ms = _fake_mentions(4, sents=[0, 1, 1, 2])
    store = EntityStore.from_groups(ms, [[0, 2]])
    assert order_candidates(ms[3], store, 3) == [0, 1]
