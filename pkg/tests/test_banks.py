import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from textcf import banks
from textcf.corpus import Corpus
from textcf.models import train_count_embedder


class TestOverrepresentationTest:
    def test_zero_observations(self):
        assert banks.overrepresentation_test(0, 10, 5, 100) == 1.0

    def test_all_successes(self):
        p = banks.overrepresentation_test(10, 10, 10, 100)
        assert p == pytest.approx(1e-10, rel=1e-6)

    def test_derived_tail(self):
        assert banks.overrepresentation_test(3, 10, 10, 100) == pytest.approx(
            0.0702, abs=5e-5
        )

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            banks.overrepresentation_test(0, 0, 0, 0)

    def test_inconsistent_counts(self):
        with pytest.raises(ValueError):
            banks.overrepresentation_test(5, 4, 10, 100)
        with pytest.raises(ValueError):
            banks.overrepresentation_test(5, 10, 4, 100)

    @given(
        st.integers(min_value=1, max_value=30),
        st.integers(min_value=30, max_value=200),
    )
    @settings(max_examples=30)
    def test_monotone_in_class_count(self, n, overall):
        word_overall = overall // 3 + 1
        ps = [
            banks.overrepresentation_test(k, n, max(word_overall, k), overall + n)
            for k in range(n + 1)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(ps, ps[1:]))


def two_class_corpus(pos_texts, neg_texts):
    examples = [(t, "pos") for t in pos_texts] + [(t, "neg") for t in neg_texts]
    return Corpus(examples=tuple(examples), labels=("pos", "neg"))


class TestBuildWordBanks:
    def _selection(self):
        return banks.PosSelection(differentiating=frozenset({"adjective"}))

    def test_overrepresented_word_included(self):
        corpus = two_class_corpus(
            ["excellent food here"] * 20, ["the service was slow today"] * 20
        )
        out = banks.build_word_banks(corpus, self._selection(), k=10)
        pos_bank = next(b for b in out if b.class_id == "pos" and b.pos == "adjective")
        assert "excellent" in pos_bank.words()
        for _, p in pos_bank.entries:
            assert p < 0.05

    def test_balanced_word_excluded(self):
        corpus = two_class_corpus(
            ["fine food"] * 10 + ["excellent meal"] * 10,
            ["fine service"] * 10 + ["slow meal"] * 10,
        )
        out = banks.build_word_banks(corpus, self._selection(), k=10)
        for bank in out:
            assert "fine" not in bank.words()

    def test_k_truncation(self):
        corpus = two_class_corpus(
            ["excellent superb wonderful delightful splendid"] * 30,
            ["awful dreadful terrible horrible atrocious"] * 30,
        )
        out = banks.build_word_banks(corpus, self._selection(), k=1)
        for bank in out:
            assert len(bank.entries) <= 1

    def test_entries_sorted_by_p(self):
        corpus = two_class_corpus(
            ["excellent excellent superb"] * 20, ["awful stuff"] * 20
        )
        out = banks.build_word_banks(corpus, self._selection(), k=10)
        for bank in out:
            ps = [p for _, p in bank.entries]
            assert ps == sorted(ps)

    def test_two_class_banks_disjoint(self):
        corpus = two_class_corpus(
            ["excellent tasty food"] * 25, ["awful greasy food"] * 25
        )
        out = banks.build_word_banks(corpus, self._selection(), k=10)
        pos_bank = next(b for b in out if b.class_id == "pos" and b.pos == "adjective")
        neg_bank = next(b for b in out if b.class_id == "neg" and b.pos == "adjective")
        assert not set(pos_bank.words()) & set(neg_bank.words())

    def test_serialization_round_trip(self, tmp_path):
        corpus = two_class_corpus(["excellent food"] * 20, ["awful food"] * 20)
        out = banks.build_word_banks(corpus, self._selection(), k=10)
        path = tmp_path / "banks.json"
        banks.save_banks(out, path)
        loaded = banks.load_banks(path)
        assert {(b.class_id, b.pos): b.entries for b in loaded} == {
            (b.class_id, b.pos): b.entries for b in out
        }


class TestManovaPillai:
    def test_identical_groups(self):
        g = [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [0.2, 0.8]]
        assert banks.manova_pillai([g, list(g)]) == pytest.approx(1.0, abs=1e-9)

    def test_one_dimensional_reduces_to_anova(self):
        g1 = [0.0, 0.1, -0.1, 0.05, -0.05]
        g2 = [5.0, 5.1, 4.9, 5.05, 4.95]
        p = banks.manova_pillai([g1, g2])
        assert p < 0.05
        # agreement with a hand-rolled one-way ANOVA F test
        import statistics

        mean1, mean2 = statistics.fmean(g1), statistics.fmean(g2)
        grand = statistics.fmean(g1 + g2)
        ssb = len(g1) * (mean1 - grand) ** 2 + len(g2) * (mean2 - grand) ** 2
        ssw = sum((x - mean1) ** 2 for x in g1) + sum((x - mean2) ** 2 for x in g2)
        f_stat = (ssb / 1) / (ssw / (len(g1) + len(g2) - 2))
        from textcf import stats

        assert p == pytest.approx(stats.f_sf(f_stat, 1, len(g1) + len(g2) - 2), rel=1e-6)

    def test_separated_2d_clusters(self):
        rng = random.Random(0)
        g1 = [[rng.gauss(0, 0.1), rng.gauss(0, 0.1)] for _ in range(20)]
        g2 = [[rng.gauss(10, 0.1), rng.gauss(10, 0.1)] for _ in range(20)]
        assert banks.manova_pillai([g1, g2]) < 1e-6
        assert banks.pillai_permutation_p([g1, g2], seed=1) <= 0.002

    def test_affine_invariance_of_trace(self):
        rng = random.Random(3)
        g1 = [[rng.gauss(0, 1), rng.gauss(1, 2)] for _ in range(15)]
        g2 = [[rng.gauss(2, 1), rng.gauss(0, 2)] for _ in range(12)]
        base = banks.pillai_trace([np.array(g1), np.array(g2)])
        for seed in range(5):
            srng = np.random.default_rng(seed)
            m = srng.normal(size=(2, 2))
            while abs(np.linalg.det(m)) < 0.1:
                m = srng.normal(size=(2, 2))
            shift = srng.normal(size=2)
            t1 = np.array(g1) @ m.T + shift
            t2 = np.array(g2) @ m.T + shift
            assert banks.pillai_trace([t1, t2]) == pytest.approx(base, abs=1e-6)

    def test_precondition_errors(self):
        with pytest.raises(ValueError):
            banks.manova_pillai([[[1.0, 2.0]]])
        with pytest.raises(ValueError):
            banks.manova_pillai([[[1.0]], [[1.0, 2.0]]])
        with pytest.raises(ValueError):  # n <= g + d
            banks.manova_pillai([[[1.0, 2.0]], [[2.0, 1.0]]])

    def test_f_approximation_matches_permutation(self):
        rng = random.Random(12)
        disagreements = []
        for trial in range(20):
            g_count = rng.choice([2, 3])
            d = rng.choice([1, 2])
            shift = rng.uniform(0.0, 1.2)
            groups = []
            for gi in range(g_count):
                size = rng.randint(8, 14)
                centre = [gi * shift] * d
                groups.append(
                    [[rng.gauss(centre[k], 1.0) for k in range(d)] for _ in range(size)]
                )
            p_f = banks.manova_pillai(groups)
            p_perm = banks.pillai_permutation_p(groups, n_shuffles=3000, seed=trial)
            disagreements.append(abs(p_f - p_perm))
        assert max(disagreements) <= 0.03


class TestSelectDifferentiatingPos:
    def test_adjectives_separate_sentiment_toy(self):
        corpus = two_class_corpus(
            [
                "the movie was great and wonderful .",
                "the film was excellent and superb .",
                "the show was tasty and delicious .",
                "honestly the game was fresh and lovely .",
            ]
            * 6,
            [
                "the movie was awful and terrible .",
                "the film was horrible and dreadful .",
                "the show was greasy and bland .",
                "honestly the game was stale and nasty .",
            ]
            * 6,
        )
        emb = train_count_embedder(corpus)
        selection = banks.select_differentiating_pos(corpus, emb)
        assert "adjective" in selection.differentiating
        assert "determiner" not in selection.differentiating

    def test_single_class_gives_empty_selection(self):
        # with every example in one class there are never two groups to test
        corpus = Corpus(
            examples=(("great movie", "pos"), ("fine film", "pos"), ("strange plot", "pos")),
            labels=("pos", "neg"),
        )
        emb_corpus = two_class_corpus(["great movie fine film"], ["strange plot"])
        selection = banks.select_differentiating_pos(
            corpus, train_count_embedder(emb_corpus)
        )
        assert selection.differentiating == frozenset()
        assert selection.p_values == {}

    def test_absent_pos_not_in_pvalues(self):
        corpus = two_class_corpus(["great food"] * 8, ["awful food"] * 8)
        emb = train_count_embedder(corpus)
        selection = banks.select_differentiating_pos(corpus, emb)
        assert "numeral" not in selection.p_values
