import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binomtest

from descboost.core import SpanAnnotation, TokenizedCorpus, TokenizedSentence, RelationInstance
from descboost.errors import CorpusMismatch, InsufficientSamples, ValidationError
from descboost.evaluation import (
    FIGURE_HEADER,
    FigurePoint,
    correlation_analysis,
    entity_metrics,
    export_figures_data,
    read_figures_data,
    relation_metrics,
    sign_test_p_value,
)

from .conftest import corpus, entity_spec, relation_spec, sentence
from .oracles import oracle_binomial_two_sided


def spans(*triples):
    return [SpanAnnotation(si, s, e, c, 1.0) for (si, s, e, c) in triples]


class TestEntityMetrics:
    def _fixture(self):
        # 8 tokens, 2 classes, one boundary error:
        # s0: gold A on [1,3), predicted A on [2,4)  -> tp=1 fp=1 fn=1
        # s1: gold B on [0,1), predicted exactly     -> tp=1
        gold = corpus(
            sentence(["t0", "t1", "t2", "t3"], [(1, 3, "A")]),
            sentence(["u0", "u1", "u2", "u3"], [(0, 1, "B")]),
        )
        pred = [
            spans((0, 2, 4, "A")),
            spans((1, 0, 1, "B")),
        ]
        return pred, gold, entity_spec("A", "B")

    def test_hand_counted_fixture(self):
        pred, gold, spec = self._fixture()
        report = entity_metrics(pred, gold, spec)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.micro_f1 == pytest.approx(2 / 3)
        assert report.per_class["A"].f1 == pytest.approx(0.5)
        assert report.per_class["B"].f1 == pytest.approx(1.0)
        assert report.macro_f1 == pytest.approx(0.75)
        assert report.accuracy == pytest.approx(0.75)
        assert report.per_class["A"].support == 2
        assert report.per_class["B"].support == 1

    def test_micro_f1_is_harmonic_mean(self):
        pred, gold, spec = self._fixture()
        report = entity_metrics(pred, gold, spec)
        p, r = report.precision, report.recall
        assert report.micro_f1 == pytest.approx(2 * p * r / (p + r))

    def test_perfect_predictions_are_all_ones(self):
        gold = corpus(
            sentence(["a", "b", "c"], [(0, 2, "A")]),
            sentence(["d", "e"], [(1, 2, "B")]),
        )
        pred = [spans((0, 0, 2, "A")), spans((1, 1, 2, "B"))]
        report = entity_metrics(pred, gold, entity_spec("A", "B"))
        assert (report.precision, report.recall, report.micro_f1, report.macro_f1, report.accuracy) == (
            1.0, 1.0, 1.0, 1.0, 1.0,
        )

    def test_all_o_predictions(self):
        gold = corpus(sentence(["a", "b", "c", "d"], [(0, 1, "A")]))
        report = entity_metrics([[]], gold, entity_spec("A"))
        assert report.precision == 0.0
        assert report.recall == 0.0
        assert report.micro_f1 == 0.0
        assert report.accuracy == pytest.approx(3 / 4)

    def test_zero_support_class_contributes_zero_to_macro(self):
        gold = corpus(sentence(["a", "b"], [(0, 1, "A")]))
        pred = [spans((0, 0, 1, "A"))]
        report = entity_metrics(pred, gold, entity_spec("A", "GHOST"))
        assert report.per_class["GHOST"].f1 == 0.0
        assert report.macro_f1 == pytest.approx(0.5)

    def test_sentence_count_mismatch(self):
        gold = corpus(sentence(["a"]))
        with pytest.raises(CorpusMismatch):
            entity_metrics([[], []], gold, entity_spec("A"))

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_pred_equals_gold_is_all_ones_fuzzed(self, seed):
        rng = random.Random(seed)
        class_ids = [f"C{i}" for i in range(1, rng.randint(2, 5))]
        sentences = []
        pred = []
        for si in range(rng.randint(1, 6)):
            n = rng.randint(1, 10)
            gold_spans = []
            pos = 0
            while pos < n:
                if rng.random() < 0.4:
                    end = min(n, pos + rng.randint(1, 3))
                    gold_spans.append((pos, end, rng.choice(class_ids)))
                    pos = end
                else:
                    pos += 1
            sentences.append(sentence([f"w{i}" for i in range(n)], gold_spans))
            pred.append(spans(*[(si, s, e, c) for (s, e, c) in gold_spans]))
        gold = corpus(*sentences)
        mentioned = sorted({s.class_id for sent in gold.sentences for s in sent.gold_spans})
        if not mentioned:
            return
        report = entity_metrics(pred, gold, entity_spec(*mentioned))
        assert report.accuracy == 1.0
        assert report.micro_f1 == 1.0
        assert report.macro_f1 == 1.0

    def test_sentence_permutation_invariance(self):
        pred, gold, spec = self._fixture()
        flipped_gold = TokenizedCorpus(tuple(reversed(gold.sentences)))
        flipped_pred = [
            [SpanAnnotation(0, s.start, s.end, s.class_id, s.score) for s in pred[1]],
            [SpanAnnotation(1, s.start, s.end, s.class_id, s.score) for s in pred[0]],
        ]
        a = entity_metrics(pred, gold, spec)
        b = entity_metrics(flipped_pred, flipped_gold, spec)
        assert a == b


def relation_corpus(labels):
    sents = tuple(
        TokenizedSentence(("a", "b", "c"), (), RelationInstance((0, 1), (2, 3), label))
        for label in labels
    )
    return TokenizedCorpus(sents)


class TestRelationMetrics:
    def test_perfect_predictions(self):
        gold = relation_corpus(["A", "B"])
        report = relation_metrics(["A", "B"], gold, relation_spec("A", "B"))
        assert (report.precision, report.recall, report.micro_f1, report.macro_f1, report.accuracy) == (
            1.0, 1.0, 1.0, 1.0, 1.0,
        )

    def test_hand_counted_confusion(self):
        gold = relation_corpus(["A", "A", "B", "B", "C"])
        pred = ["A", "B", "B", "C", "C"]
        report = relation_metrics(pred, gold, relation_spec("A", "B", "C"))
        assert report.accuracy == pytest.approx(0.6)
        assert report.micro_f1 == pytest.approx(0.6)
        assert report.recall == pytest.approx(0.6)
        assert report.precision == pytest.approx(2 / 3)  # macro-precision
        assert report.macro_f1 == pytest.approx(11 / 18)
        assert report.per_class["A"].precision == pytest.approx(1.0)
        assert report.per_class["A"].recall == pytest.approx(0.5)
        assert report.per_class["C"].recall == pytest.approx(1.0)

    def test_micro_identity_micro_f1_equals_accuracy_equals_recall(self):
        rng = random.Random(3)
        classes = ["A", "B", "C", "D"]
        for _ in range(50):
            labels = [rng.choice(classes) for _ in range(rng.randint(1, 30))]
            pred = [rng.choice(classes) for _ in labels]
            report = relation_metrics(pred, relation_corpus(labels), relation_spec(*classes))
            assert report.micro_f1 == report.accuracy == report.recall

    def test_single_class_identity(self):
        gold = relation_corpus(["A", "A"])
        report = relation_metrics(["A", "A"], gold, relation_spec("A"))
        assert report.accuracy == report.recall == report.micro_f1 == 1.0

    def test_unknown_prediction_rejected(self):
        gold = relation_corpus(["A"])
        with pytest.raises(ValidationError):
            relation_metrics(["Z"], gold, relation_spec("A", "B"))


class TestSignTest:
    def test_perfectly_anti_monotone_n4(self):
        samples = {"C": [(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)]}
        report = correlation_analysis(samples)
        cls = report.per_class[0]
        assert cls.concordant == 0
        assert cls.discordant == 6
        assert cls.p_value == pytest.approx(0.03125, abs=0)
        assert report.p_value == pytest.approx(0.03125, abs=0)
        assert cls.pearson_r == pytest.approx(-1.0)

    def test_constant_entropy_has_no_valid_pairs(self):
        samples = {"C": [(0.5, 1.0), (0.5, 2.0), (0.5, 3.0)]}
        report = correlation_analysis(samples)
        cls = report.per_class[0]
        assert cls.concordant == cls.discordant == 0
        assert cls.p_value is None
        assert "no valid pairs" in cls.note

    def test_matches_exact_binomial_oracles(self):
        rng = random.Random(17)
        for _ in range(200):
            concordant = rng.randint(0, 30)
            discordant = rng.randint(0, 30)
            if concordant + discordant == 0:
                continue
            ours = sign_test_p_value(concordant, discordant)
            n = concordant + discordant
            assert ours == pytest.approx(oracle_binomial_two_sided(discordant, n), abs=1e-12)
            scipy_p = binomtest(discordant, n, 0.5, alternative="two-sided").pvalue
            assert ours == pytest.approx(float(scipy_p), rel=1e-9)

    def test_random_samples_end_to_end(self):
        rng = random.Random(23)
        points = [(rng.random(), rng.random()) for _ in range(12)]
        report = correlation_analysis({"C": points})
        concordant = discordant = 0
        for i in range(12):
            for j in range(i + 1, 12):
                dh = points[i][0] - points[j][0]
                df = points[i][1] - points[j][1]
                if dh and df:
                    if (dh > 0) == (df > 0):
                        concordant += 1
                    else:
                        discordant += 1
        cls = report.per_class[0]
        assert (cls.concordant, cls.discordant) == (concordant, discordant)
        assert cls.p_value == pytest.approx(
            oracle_binomial_two_sided(discordant, concordant + discordant), abs=1e-12
        )

    def test_too_few_samples_raise(self):
        with pytest.raises(InsufficientSamples):
            correlation_analysis({"C": [(0.1, 0.2), (0.3, 0.4)]})

    def test_aggregate_pools_pairs_across_classes(self):
        samples = {
            "C1": [(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)],
            "C2": [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)],
        }
        report = correlation_analysis(samples)
        assert report.concordant == 3
        assert report.discordant == 6
        assert report.p_value == pytest.approx(oracle_binomial_two_sided(6, 9), abs=1e-12)


class TestPearsonProperties:
    def test_affine_invariance_and_sign_flip(self):
        rng = random.Random(29)
        xs = [rng.random() for _ in range(20)]
        ys = [rng.random() for _ in range(20)]
        base = correlation_analysis({"C": list(zip(xs, ys))}).per_class[0].pearson_r
        scaled = correlation_analysis(
            {"C": [(3.0 * x + 7.0, 0.5 * y - 2.0) for x, y in zip(xs, ys)]}
        ).per_class[0].pearson_r
        flipped = correlation_analysis({"C": [(-x, y) for x, y in zip(xs, ys)]}).per_class[0].pearson_r
        assert scaled == pytest.approx(base, abs=1e-9)
        assert flipped == pytest.approx(-base, abs=1e-9)


class TestFigureExport:
    def test_header_and_round_trip(self, tmp_path):
        points = [
            FigurePoint("FAC", "paraphrase", 0, 0.438, 0.21),
            FigurePoint("FAC", "paraphrase", 1, 0.558, 0.19),
            FigurePoint("LOC", "summarize", 0, 0.465, 0.33),
        ]
        path = tmp_path / "figures.csv"
        export_figures_data(points, path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(FIGURE_HEADER)
        assert read_figures_data(path) == points

    def test_empty_export_is_header_only(self, tmp_path):
        path = tmp_path / "figures.csv"
        export_figures_data([], path)
        assert path.read_text().splitlines() == [",".join(FIGURE_HEADER)]
        assert read_figures_data(path) == []

    def test_row_count_is_classes_times_strategies_times_variations(self, tmp_path):
        points = [
            FigurePoint(c, s, i, 0.1 * i, 0.2)
            for c in ("A", "B", "C")
            for s in ("paraphrase", "summarize")
            for i in range(4)
        ]
        path = tmp_path / "figures.csv"
        export_figures_data(points, path)
        assert len(path.read_text().splitlines()) == 1 + 3 * 2 * 4
