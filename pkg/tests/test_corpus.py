from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridcoref.corpus import Animacy, Document, Token, parse_conll, read_conll, write_conll
from hybridcoref.errors import EmptyInput, InconsistentChain, MalformedLine

from helpers import build_doc

FIXTURE = Path(__file__).parent / "fixtures" / "three_docs.conll"


def _line(doc="d", sent=0, form="x", chain="-", idx="-", extra=()):
    cols = [doc, str(sent), form, "N", "O", form, form, "O", idx, chain, "-", "B-NP", "NN", *extra]
    return "\t".join(cols)


def test_two_token_span_reconstructed():
    text = "\n".join([_line(form="Ali", chain="4", idx="0"), _line(form="Karimi", chain="4", idx="0")])
    [doc] = parse_conll(text)
    assert len(doc.gold_chains) == 1
    assert doc.gold_chains[0].chain_id == 4
    assert doc.gold_chains[0].spans == ((0, 0, 1),)


def test_short_line_reports_its_number():
    lines = [_line(form="a"), _line(form="b"), "d 0 c N O c c O - -", _line(form="d")]
    with pytest.raises(MalformedLine) as exc:
        parse_conll("\n".join(lines))
    assert exc.value.lineno == 3


def test_empty_input():
    with pytest.raises(EmptyInput):
        parse_conll("  \n\n")


def test_interrupted_mention_run():
    text = "\n".join([
        _line(form="a", chain="1", idx="0"),
        _line(form="b"),
        _line(form="c", chain="1", idx="0"),
    ])
    with pytest.raises(InconsistentChain):
        parse_conll(text)


def test_mention_may_not_cross_sentences():
    text = "\n".join([_line(form="a", chain="1", idx="0"), "", _line(sent=1, form="b", chain="1", idx="0")])
    with pytest.raises(InconsistentChain):
        parse_conll(text)


def test_extra_columns_are_ignored_with_warning(caplog):
    text = "\n".join([_line(form="a", extra=("junk",)), _line(form="b", extra=("junk",))])
    [doc] = parse_conll(text)
    assert [t.form for t in doc.tokens] == ["a", "b"]
    assert sum("ignoring trailing" in r.message for r in caplog.records) == 1


def test_document_boundary_on_name_change():
    text = "\n".join([_line(doc="a", form="x"), _line(doc="b", form="y")])
    docs = parse_conll(text)
    assert [d.doc_id for d in docs] == ["a", "b"]


def test_sentence_boundary_on_sentence_column_change():
    text = "\n".join([_line(sent=0, form="x"), _line(sent=1, form="y")])
    [doc] = parse_conll(text)
    assert [len(s) for s in doc.sentences] == [1, 1]


def test_token_indices_and_fields():
    [doc] = parse_conll("\n".join([_line(form="a"), _line(form="b"), "", _line(sent=1, form="c")]))
    assert [t.doc_token_index for t in doc.tokens] == [0, 1, 2]
    assert [(t.sent_index, t.token_index) for t in doc.tokens] == [(0, 0), (0, 1), (1, 0)]
    t = doc.tokens[0]
    assert t.coref_chain_id is None and t.coref_mention_index is None


def test_animacy_column_values():
    assert Animacy.parse("animate") is Animacy.ANIMATE
    assert Animacy.parse("Inanimate") is Animacy.INANIMATE
    assert Animacy.parse("-") is Animacy.UNKNOWN
    assert Animacy.parse("robot") is Animacy.UNKNOWN


def test_empty_document_list_writes_nothing():
    assert write_conll([]) == ""


def test_document_without_chains_writes_null_markers():
    doc = build_doc([["Ali/N/NNP/B-PER/B-NP", "spoke/V/VBD/O/B-VP"]])
    out = write_conll([doc])
    rows = [line.split("\t") for line in out.splitlines() if line and not line.startswith("#")]
    assert all(r[8] == "-" and r[9] == "-" for r in rows)


def test_fixture_shape():
    docs = read_conll(FIXTURE)
    assert len(docs) == 3
    assert sum(len(d.sentences) for d in docs) == 10
    assert sum(len(d.gold_chains) for d in docs) == 7


def test_fixture_nested_mentions_kept():
    news3 = read_conll(FIXTURE)[2]
    spans = {c.chain_id: c.spans for c in news3.gold_chains}
    # "France" sits inside "President of France" and belongs to its own chain
    assert (0, 0, 2) in spans[6] and (0, 2, 2) in spans[7]


def _token_rows(text):
    return [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def test_fixture_round_trip_column_content():
    # independent oracle: compare the whitespace-split columns line by line
    original = FIXTURE.read_text(encoding="utf-8")
    written = write_conll(read_conll(FIXTURE))
    assert _token_rows(written) == _token_rows(original)


def test_fixture_round_trip_structure():
    docs = read_conll(FIXTURE)
    assert parse_conll(write_conll(docs)) == docs


def test_relabelled_chain_ids_give_isomorphic_chains():
    original = FIXTURE.read_text(encoding="utf-8")
    rows = _token_rows(original)
    relabel = {str(c): str(100 - c) for c in range(1, 8)}
    out = []
    for r in rows:
        if r[9] != "-":
            r = r[:9] + ["|".join(relabel[c] for c in r[9].split("|"))] + r[10:]
        out.append(r)
    # rebuild with sentence breaks where the (doc, sent) pair changes
    lines, prev = [], None
    for r in out:
        if prev is not None and (r[0], r[1]) != prev:
            lines.append("")
        lines.append("\t".join(r))
        prev = (r[0], r[1])
    a = read_conll(FIXTURE)
    b = parse_conll("\n".join(lines))
    for da, db in zip(a, b):
        assert sorted(c.spans for c in da.gold_chains) == sorted(c.spans for c in db.gold_chains)


# ---------------------------------------------------------------------------
# property: arbitrary well-formed documents survive write -> parse

_form = st.text(alphabet="abcdefghijklmnopqrstuvwxyzABC.,:", min_size=1, max_size=6)
_tag = st.sampled_from(["N", "V", "PRO", "P", "PUNC", "ADJ"])
_ner = st.sampled_from(["O", "B-PER", "I-PER", "B-LOC", "B-ORG"])
_phrase = st.sampled_from(["O", "B-NP", "I-NP", "B-VP", "B-PP"])


@st.composite
def documents(draw):
    n_sents = draw(st.integers(1, 4))
    sents = []
    for _ in range(n_sents):
        n = draw(st.integers(1, 6))
        sents.append([
            Token(form=draw(_form), lemma=draw(_form), pos_fine=draw(st.sampled_from(["NN", "NNP", "VBD", "PRP"])),
                  pos_coarse=draw(_tag), ner=draw(_ner), ner_coarse=draw(st.sampled_from(["O", "PER", "LOC"])),
                  animacy=draw(st.sampled_from(list(Animacy))), phrase_type=draw(_phrase), original=draw(_form))
            for _ in range(n)
        ])
    # non-overlapping mentions, assigned to a few chains in document order
    counters: dict[int, int] = {}
    for si, sent in enumerate(sents):
        i = 0
        while i < len(sent):
            if draw(st.booleans()):
                j = draw(st.integers(i, len(sent) - 1))
                chain = draw(st.integers(1, 3))
                idx = counters.get(chain, 0)
                counters[chain] = idx + 1
                for k in range(i, j + 1):
                    t = sent[k]
                    sent[k] = Token(t.form, t.lemma, t.pos_fine, t.pos_coarse, t.ner, t.ner_coarse,
                                    t.animacy, t.phrase_type, coref=((chain, idx),), original=t.original)
                i = j + 1
            else:
                i += 1
    return Document.build(draw(st.sampled_from(["d1", "doc-b", "x"])), sents)


@settings(max_examples=150, deadline=None)
@given(documents())
def test_round_trip_property(doc):
    assert parse_conll(write_conll([doc])) == [doc]
