import json
import random

import pytest

from formulakit.catalog import default_catalog
from formulakit.synth import synth_corpus
from formulakit.tokenizer import (MASK_TOKEN, PAD_TOKEN, SPACE_MARKER, UNK_TOKEN,
                                  BudgetTooSmall, TokenizerModel, decode, encode,
                                  pretokenize, train_bpe)

SUMIF_EXAMPLE = '=SUMIF(B1:B5, "Not available", A1:A5)'
SUMIF_PRETOKENS = ["=", "sumif", "(", "b", "1", ":", "b", "5", ",", SPACE_MARKER,
                   '"', "not", SPACE_MARKER, "available", '"', ",", SPACE_MARKER,
                   "a", "1", ":", "a", "5", ")"]


def oracle_merges(formulas, budget, catalog=None):
    """Brute-force BPE trainer over occurrence-level segment lists.

    Independent of the production trainer: no frequency grouping, plain
    dict counting, explicit greedy left-to-right merge application.
    """
    catalog = catalog or default_catalog()
    atomics = {SPACE_MARKER}
    segments = []
    for f in formulas:
        for p in pretokenize(f, catalog):
            if p.atomic:
                atomics.add(p.text)
            else:
                segments.append(list(p.text))
    alphabet = {c for seg in segments for c in seg}
    vocab = set(atomics) | alphabet
    vocab_size = 3 + len(vocab)  # pad/unk/mask
    merges = []
    while vocab_size < budget:
        counts = {}
        for seg in segments:
            for i in range(len(seg) - 1):
                pair = (seg[i], seg[i + 1])
                counts[pair] = counts.get(pair, 0) + 1
        if not counts or max(counts.values()) < 2:
            break
        best_count = max(counts.values())
        best = min((p for p, c in counts.items() if c == best_count),
                   key=lambda p: (p[0] + p[1], p))
        merges.append(best)
        merged = best[0] + best[1]
        new_segments = []
        for seg in segments:
            out, i = [], 0
            while i < len(seg):
                if i + 1 < len(seg) and seg[i] == best[0] and seg[i + 1] == best[1]:
                    out.append(merged)
                    i += 2
                else:
                    out.append(seg[i])
                    i += 1
            new_segments.append(out)
        segments = new_segments
        if merged not in vocab:
            vocab.add(merged)
            vocab_size += 1
    return merges


class TestPretokenize:
    def test_sumif_full_example(self):
        assert [p.text for p in pretokenize(SUMIF_EXAMPLE)] == SUMIF_PRETOKENS

    def test_case_collapses(self):
        assert pretokenize("=SUM(C3)") == pretokenize("=sum(c3)")

    def test_simple_ref(self):
        assert [p.text for p in pretokenize("=A1")] == ["=", "a", "1"]

    def test_atomicity_classes(self):
        catalog = default_catalog()
        for p in pretokenize(SUMIF_EXAMPLE + " + tax_rate*2.5", catalog):
            if p.atomic:
                assert (len(p.text) == 1 and not p.text.isalpha()) \
                    or p.text == SPACE_MARKER \
                    or p.text in catalog \
                    or not p.text.isalnum(), p
            else:
                assert not any(ch.isdigit() or ch.isspace() for ch in p.text), p
                assert all(ch.isalpha() or ch == "_" for ch in p.text), p

    def test_function_names_atomic_even_as_segments(self):
        # `sum` inside a sheet name run is not the builtin; whole-run match is
        pre = {p.text: p.atomic for p in pretokenize("=summary!A1")}
        assert pre["summary"] is False
        pre = {p.text: p.atomic for p in pretokenize("=SUM(A1)")}
        assert pre["sum"] is True

    def test_multichar_operator_is_one_pretoken(self):
        assert [p.text for p in pretokenize("=A1<=B2")] == ["=", "a", "1", "<=", "b", "2"]

    def test_whitespace_one_marker_per_char(self):
        texts = [p.text for p in pretokenize("=1   +2")]
        assert texts == ["=", "1", SPACE_MARKER, SPACE_MARKER, SPACE_MARKER, "+", "2"]


class TestTrainBpe:
    def test_aaab_merge_order(self):
        model = train_bpe(['="aaab"'] * 100, budget=64)
        assert model.merges[0] == ("a", "a")
        # tie between (aa,a)=100 and (a,b)=100 resolves to "aaa" < "ab"
        assert model.merges[1] == ("aa", "a")

    def test_no_function_paren_fusion(self):
        corpus = synth_corpus(300, seed=21)
        model = train_bpe(corpus, budget=600)
        names = default_catalog().names()
        for tok in model.vocab:
            for name in names:
                assert tok != name + "(", tok

    def test_empty_corpus_minimal_model(self):
        model = train_bpe([], budget=4)
        assert model.merges == []
        assert set(model.vocab) == {PAD_TOKEN, UNK_TOKEN, MASK_TOKEN, SPACE_MARKER}

    def test_budget_floor_error(self):
        with pytest.raises(BudgetTooSmall, match="minimum floor"):
            train_bpe(['="aaab"'], budget=5)

    def test_budget_respected_exactly(self):
        corpus = synth_corpus(200, seed=4)
        saturated = train_bpe(corpus, budget=4096)  # merges run out first
        budget = len(saturated.vocab) - 30
        model = train_bpe(corpus, budget=budget)
        # enough repeating pairs at this scale to exhaust the budget exactly
        assert len(model.vocab) == budget
        assert model.merges == saturated.merges[:len(model.merges)]

    def test_oracle_equivalence_micro_corpora(self):
        corpora = [
            ['="aaab"'] * 100,
            synth_corpus(30, seed=1),
            synth_corpus(50, seed=2),
            ['=IF(ISERROR(G6*1.2),"")', "=B2<=EDATE(TODAY(),-33)"] * 10,
            ["='My Sheet'!A1&\"total total\"", "=tax_rate*basis"] * 5,
        ]
        for corpus in corpora:
            model = train_bpe(corpus, budget=200)
            assert model.merges == oracle_merges(corpus, 200)

    def test_deterministic_model_bytes(self, tmp_path):
        corpus = synth_corpus(80, seed=6)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        train_bpe(corpus, budget=256).save(a)
        train_bpe(list(corpus), budget=256).save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_atomic_inventory_covered_by_vocab(self):
        corpus = synth_corpus(120, seed=14)
        model = train_bpe(corpus, budget=512)
        vocab = set(model.vocab)
        for f in corpus:
            for p in pretokenize(f):
                if p.atomic:
                    assert p.text in vocab, p

    def test_merge_outputs_stay_inside_segments(self):
        model = train_bpe(synth_corpus(200, seed=13), budget=512)
        for left, right in model.merges:
            merged = left + right
            assert not any(ch.isdigit() or ch.isspace() for ch in merged), merged
            assert SPACE_MARKER not in merged
            assert all(ch.isalpha() or ch == "_" for ch in merged), merged


@pytest.fixture(scope="module")
def model():
    return train_bpe(synth_corpus(300, seed=31), budget=512)


class TestEncodeDecode:
    def test_zero_merges_passthrough(self):
        model = train_bpe(["=A1"], budget=16)
        assert model.merges == []
        ids = encode(model, "=A1")
        assert [model.vocab[i] for i in ids] == ["=", "a", "1"]

    def test_aaab_encoding_uses_merges(self):
        model = train_bpe(['="aaab"'] * 100, budget=64)
        ids = encode(model, '="aaab"')
        assert [model.vocab[i] for i in ids] == ["=", '"', "aaab", '"']

    def test_decode_round_trip_lowercases(self, model):
        assert decode(model, encode(model, "=SUM(A1)")) == "=sum(a1)"
        assert decode(model, encode(model, "=sum(a1:a10)")) == "=sum(a1:a10)"

    def test_encode_decode_fixed_point(self, model):
        rng = random.Random(17)
        for f in synth_corpus(50, seed=18):
            text = decode(model, encode(model, f))
            assert decode(model, encode(model, text)) == text

    def test_case_insensitive_encoding(self, model):
        rng = random.Random(19)
        for f in synth_corpus(50, seed=20):
            assert encode(model, f) == encode(model, f.upper())

    def test_out_of_range_id(self, model):
        with pytest.raises(ValueError, match="position 0"):
            decode(model, [len(model.vocab)])
        with pytest.raises(ValueError, match="position 2"):
            decode(model, [0, 1, -1])

    def test_unknown_chars_map_to_unk(self, model):
        ids = encode(model, "=Ω1")
        assert model.unk_id in ids

    def test_mask_literal_maps_to_special_id(self, model):
        ids = encode(model, "=SUM(<mask>)")
        assert model.mask_id in ids
        assert decode(model, ids) == "=sum(<mask>)"

    def test_whitespace_collapses_to_single_spaces(self, model):
        assert decode(model, encode(model, "=1,\t2")) == "=1, 2"


class TestModelFile:
    def test_save_load_round_trip(self, tmp_path):
        model = train_bpe(synth_corpus(60, seed=40), budget=256)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = TokenizerModel.load(path)
        assert loaded.vocab == model.vocab
        assert loaded.merges == model.merges
        assert loaded.specials == model.specials
        assert loaded.budget == model.budget
        f = "=SUM(A1:A10)"
        assert encode(loaded, f) == encode(model, f)

    def test_stable_schema(self, tmp_path):
        model = train_bpe(["=A1"], budget=16)
        path = tmp_path / "m.json"
        model.save(path)
        obj = json.loads(path.read_text("utf-8"))
        assert list(obj) == ["vocab", "merges", "specials", "budget"]
        assert list(obj["specials"]) == ["mask_token", "pad", "unknown", "space_marker"]
