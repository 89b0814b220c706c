import math
from fractions import Fraction

import pytest

from qcomp.lm import (
    LMError, conditional_logprobs, logprob, read_arpa, slor, train_lm,
    write_arpa,
)

HAND_CORPUS = [["the", "cat", "sat"], ["the", "cat", "ran"]]

# Frozen from an exact-fraction oracle of interpolated absolute discounting
# (discount 3/4, unigram floor 1/(V+1), no end-of-sentence event):
#   P1(the) = 37/120, P1(sat) = 17/120, P1(<unseen>) = 1/10
#   P3(sat | the cat) = 191/640 = 0.2984375
#   P3(the | <s> <s>) = 2311/2560 = 0.902734375
#   P_m(the cat sat)  = 1020077711/4194304000
#   SLOR(the cat sat) = 0.9645258187653103
P1_THE = 37 / 120
P1_SAT = 17 / 120
P1_UNSEEN = 0.1
P3_SAT = 191 / 640
P3_THE_BOS = 2311 / 2560
PM_HAND = 1020077711 / 4194304000
SLOR_HAND = 0.9645258187653103


@pytest.fixture
def hand_lm():
    return train_lm(HAND_CORPUS, order=3)


class TestTraining:
    def test_empty_corpus_rejected(self):
        with pytest.raises(LMError):
            train_lm([])
        with pytest.raises(LMError):
            train_lm([[]])

    def test_symmetric_corpus_gives_equal_unigrams(self):
        lm = train_lm([["a", "b"], ["a", "b"]])
        assert lm.unigram_prob("a") == lm.unigram_prob("b")

    def test_one_sentence_one_token(self):
        lm = train_lm([["x"]])
        lp = logprob(lm, ["x"])
        assert math.isfinite(lp) and lp < 0

    def test_case_insensitive_counting(self):
        lm = train_lm([["The", "CAT"], ["the", "cat"]])
        assert lm.unigram_prob("THE") == lm.unigram_prob("the")

    def test_bad_order_rejected(self):
        with pytest.raises(LMError):
            train_lm([["a"]], order=4)

    def test_bad_discount_rejected(self):
        with pytest.raises(LMError):
            train_lm([["a"]], discount=1.0)


class TestHandComputedValues:
    def test_unigram_probabilities(self, hand_lm):
        assert hand_lm.unigram_prob("the") == pytest.approx(P1_THE, abs=1e-12)
        assert hand_lm.unigram_prob("sat") == pytest.approx(P1_SAT, abs=1e-12)
        assert hand_lm.unigram_prob("zzz") == pytest.approx(P1_UNSEEN, abs=1e-12)

    def test_trigram_conditional(self, hand_lm):
        assert hand_lm.prob("sat", ["the", "cat"]) == pytest.approx(P3_SAT, abs=1e-12)
        assert hand_lm.prob("the", ["<s>", "<s>"]) == pytest.approx(P3_THE_BOS, abs=1e-12)

    def test_sat_and_ran_symmetric(self, hand_lm):
        assert hand_lm.prob("sat", ["the", "cat"]) == hand_lm.prob("ran", ["the", "cat"])

    def test_sequence_probability_and_slor(self, hand_lm):
        assert math.exp(logprob(hand_lm, ["the", "cat", "sat"])) == \
            pytest.approx(PM_HAND, abs=1e-12)
        assert slor(hand_lm, ["the", "cat", "sat"]) == \
            pytest.approx(SLOR_HAND, abs=1e-9)


class TestLogprob:
    def test_always_nonpositive(self, hand_lm):
        for seq in (["the"], ["the", "cat"], ["zzz", "qqq"], ["ran", "the", "sat"]):
            assert logprob(hand_lm, seq) <= 0

    def test_case_folding_contract(self, hand_lm):
        assert logprob(hand_lm, ["The", "Cat"]) == logprob(hand_lm, ["the", "cat"])

    def test_chain_rule_product_two_word_vocab(self):
        lm = train_lm([["x", "y"], ["y", "x"]], order=3)
        seq = ["x", "y", "x"]
        direct = (lm.prob("x", ["<s>", "<s>"])
                  * lm.prob("y", ["<s>", "x"])
                  * lm.prob("x", ["x", "y"]))
        assert math.exp(logprob(lm, seq)) == pytest.approx(direct, rel=1e-12)

    def test_empty_sequence_rejected(self, hand_lm):
        with pytest.raises(LMError):
            logprob(hand_lm, [])
        with pytest.raises(LMError):
            slor(hand_lm, [])


class TestSlorIdentities:
    def test_order_one_model_gives_exact_zero(self):
        lm = train_lm(HAND_CORPUS, order=1)
        for seq in (["the"], ["the", "cat", "sat"], ["zzz"], ["ran", "ran"],
                    ["The", "CAT", "sat", "ran"]):
            assert slor(lm, seq) == 0.0

    def test_single_token_when_model_equals_unigram(self):
        lm = train_lm(HAND_CORPUS, order=1)
        assert slor(lm, ["cat"]) == 0.0

    def test_case_invariance(self, hand_lm):
        assert slor(hand_lm, ["THE", "CAT", "SAT"]) == \
            slor(hand_lm, ["the", "cat", "sat"])

    def test_concatenation_differs_only_at_boundaries(self, hand_lm):
        seq = ["the", "cat", "sat"]
        double = seq + seq
        single_lps = conditional_logprobs(hand_lm, seq)
        double_lps = conditional_logprobs(hand_lm, double)
        # positions with fully internal trigram context match exactly
        assert double_lps[2] == single_lps[2]
        # strip the context-boundary positions (first two of each copy) and the
        # per-token ratios coincide with the single sequence's internal ones
        uni = [math.log(hand_lm.unigram_prob(t)) for t in double]
        internal = [double_lps[i] - uni[i] for i in (2, 5)]
        base = single_lps[2] - math.log(hand_lm.unigram_prob(seq[2]))
        assert internal[0] == pytest.approx(base, abs=1e-12)


class TestNormalization:
    def test_unigram_mass_sums_to_one(self, hand_lm):
        support = sorted(hand_lm.vocab) + ["<unk-probe>"]
        assert sum(hand_lm.unigram_prob(w) for w in support) == \
            pytest.approx(1.0, abs=1e-9)

    def test_conditional_mass_sums_to_one(self, hand_lm):
        support = sorted(hand_lm.vocab) + ["<unk-probe>"]
        contexts = [("the", "cat"), ("<s>", "the"), ("<s>", "<s>"),
                    ("cat", "sat"), ("nope", "nada"), ("cat",), ("sat",)]
        for ctx in contexts:
            total = sum(hand_lm.prob(w, ctx) for w in support)
            assert total == pytest.approx(1.0, abs=1e-9), ctx

    def test_conditional_mass_on_50_random_contexts(self):
        import random
        rng = random.Random(13)
        words = ["a", "bb", "ccc", "dd", "e"]
        sentences = [[rng.choice(words) for _ in range(rng.randint(1, 6))]
                     for _ in range(30)]
        lm = train_lm(sentences, order=3)
        support = sorted(lm.vocab) + ["<unk-probe>"]
        pool = support + ["<s>"]
        for _ in range(50):
            ctx = (rng.choice(pool), rng.choice(pool))
            total = sum(lm.prob(w, ctx) for w in support)
            assert total == pytest.approx(1.0, abs=1e-9), ctx

    def test_exact_fraction_cross_check(self):
        # independent rational recomputation of P1 on a fresh corpus
        lm = train_lm([["a", "a", "b"]], order=1)
        n, d = Fraction(3), Fraction(3, 4)
        types, floor = 2, Fraction(1, 3)
        expected_a = (Fraction(2) - d) / n + (d * types / n) * floor
        assert lm.unigram_prob("a") == pytest.approx(float(expected_a), abs=1e-15)


class TestArpa:
    def test_round_trip_scores_match(self, hand_lm, tmp_path):
        path = tmp_path / "hand.arpa"
        write_arpa(hand_lm, path)
        loaded = read_arpa(path)
        assert loaded.order == 3
        support = sorted(hand_lm.vocab) + ["<unk-probe>"]
        contexts = [("<s>", "<s>"), ("<s>", "the"), ("the", "cat"),
                    ("cat", "sat"), ("zz", "qq")]
        for ctx in contexts:
            for w in support:
                assert loaded.prob(w, ctx) == pytest.approx(
                    hand_lm.prob(w, ctx), rel=1e-12), (ctx, w)
        assert slor(loaded, ["the", "cat", "sat"]) == \
            pytest.approx(slor(hand_lm, ["the", "cat", "sat"]), abs=1e-12)

    def test_arpa_declares_all_orders(self, hand_lm, tmp_path):
        path = tmp_path / "orders.arpa"
        write_arpa(hand_lm, path)
        text = path.read_text()
        for header in ("ngram 1=", "ngram 2=", "ngram 3=",
                       "\\1-grams:", "\\2-grams:", "\\3-grams:"):
            assert header in text

    def test_unreadable_arpa_rejected(self, tmp_path):
        path = tmp_path / "empty.arpa"
        path.write_text("\\data\\\n\\end\\\n")
        with pytest.raises(LMError):
            read_arpa(path)
