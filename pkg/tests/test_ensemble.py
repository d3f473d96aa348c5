import random

import pytest

from descboost.core import PredictionSet, ProbVector, TaskKind
from descboost.ensemble import (
    EnsembleConfig,
    TieBreak,
    ensemble_entities,
    ensemble_relations,
    vote_counts,
)
from descboost.errors import CorpusMismatch, ValidationError

from .conftest import entity_spec, entity_predictions, onehotish, relation_spec
from .oracles import oracle_ensemble_sentence, oracle_relation_vote


def london_bridge_pipelines(spec):
    """10 pipelines over ["London", "Bridge"]: 4 say (0,2,FAC),
    4 say (0,1,LOC), 2 say (1,2,FAC)."""
    whole = [[1, 1]]        # FAC FAC -> one merged span (0,2,FAC)
    london = [[2, 0]]       # LOC O   -> (0,1,LOC)
    bridge = [[0, 1]]       # O FAC   -> (1,2,FAC)
    pipelines = []
    for i in range(4):
        pipelines.append(entity_predictions(f"whole-{i}", spec, whole))
    for i in range(4):
        pipelines.append(entity_predictions(f"london-{i}", spec, london))
    for i in range(2):
        pipelines.append(entity_predictions(f"bridge-{i}", spec, bridge))
    return pipelines


class TestVoteCounts:
    def test_london_bridge_vote_table(self):
        spec = entity_spec("FAC", "LOC")
        table = vote_counts(london_bridge_pipelines(spec))
        assert table.votes(0, (0, 2), "FAC") == 6
        assert table.votes(0, (0, 2), "LOC") == 4
        assert table.votes(0, (0, 1), "LOC") == 4
        assert table.votes(0, (1, 2), "FAC") == 2

    def test_single_pipeline_single_span(self):
        spec = entity_spec("FAC")
        table = vote_counts([entity_predictions("p", spec, [[1, 1, 0]])])
        assert table.votes(0, (0, 2), "FAC") == 1
        assert table.votes(0, (0, 2), "O") == 0

    def test_per_pipeline_cap_on_fragmented_subspans(self):
        # pipeline A decodes (0,1,FAC) and (2,3,FAC); pipeline B decodes (0,3,FAC).
        # A contributes exactly 1 vote to the (0,3) cell despite two sub-spans.
        spec = entity_spec("FAC")
        a = entity_predictions("a", spec, [[1, 0, 1]])
        b = entity_predictions("b", spec, [[1, 1, 1]])
        table = vote_counts([a, b])
        assert table.votes(0, (0, 3), "FAC") == 2

    def test_corpus_mismatch_detected(self):
        spec = entity_spec("FAC")
        a = entity_predictions("a", spec, [[1, 0]])
        b = entity_predictions("b", spec, [[1, 0], [0, 0]])
        with pytest.raises(CorpusMismatch):
            vote_counts([a, b])
        c = entity_predictions("c", spec, [[1, 0, 0]])
        with pytest.raises(CorpusMismatch):
            vote_counts([a, c])


class TestEnsembleEntities:
    def test_london_bridge_final_label(self):
        spec = entity_spec("FAC", "LOC")
        result = ensemble_entities(london_bridge_pipelines(spec), spec)
        spans = [(s.start, s.end, s.class_id) for s in result[0]]
        assert spans == [(0, 2, "FAC")]

    def test_unanimous_pipelines_reproduce_single_decode(self):
        spec = entity_spec("FAC", "LOC")
        layout = [[0, 1, 1, 0, 2], [2, 0, 0, 1, 1]]
        pipelines = [entity_predictions(f"p{i}", spec, layout) for i in range(5)]
        result = ensemble_entities(pipelines, spec)
        decoded = pipelines[0].decoded_spans
        got = [[(s.start, s.end, s.class_id) for s in sent] for sent in result]
        want = [[(s.start, s.end, s.class_id) for s in sent] for sent in decoded]
        assert got == want

    def test_single_pipeline_is_identity_on_decode(self):
        spec = entity_spec("A", "B")
        pipeline = entity_predictions("p", spec, [[1, 1, 0, 2], [0, 2, 2, 0]])
        result = ensemble_entities([pipeline], spec)
        assert result == pipeline.decoded_spans

    def test_min_votes_threshold_suppresses_minority_spans(self):
        spec = entity_spec("FAC")
        voters = [entity_predictions(f"p{i}", spec, [[1, 0]]) for i in range(3)]
        abstainers = [entity_predictions(f"q{i}", spec, [[0, 0]]) for i in range(7)]
        cfg = EnsembleConfig(min_votes=6)
        result = ensemble_entities(voters + abstainers, spec, cfg)
        assert result[0] == ()
        assert ensemble_entities(voters + abstainers, spec)[0] != ()

    def test_output_never_overlaps_or_nests(self):
        spec = entity_spec("A", "B", "C")
        rng = random.Random(99)
        for _ in range(100):
            pipelines = _random_pipelines(rng, spec)
            for sent in ensemble_entities(pipelines, spec):
                for x, y in zip(sent, sent[1:]):
                    assert x.end <= y.start

    def test_pipeline_order_invariance(self):
        spec = entity_spec("A", "B", "C")
        rng = random.Random(41)
        for _ in range(50):
            pipelines = _random_pipelines(rng, spec)
            base = ensemble_entities(pipelines, spec)
            shuffled = pipelines[:]
            rng.shuffle(shuffled)
            assert ensemble_entities(shuffled, spec) == base

    def test_duplicating_all_pipelines_changes_nothing(self):
        spec = entity_spec("A", "B", "C")
        rng = random.Random(4242)
        for _ in range(50):
            pipelines = _random_pipelines(rng, spec)
            base = [
                [(s.start, s.end, s.class_id) for s in sent]
                for sent in ensemble_entities(pipelines, spec)
            ]
            doubled = [
                [(s.start, s.end, s.class_id) for s in sent]
                for sent in ensemble_entities(pipelines + pipelines, spec)
            ]
            assert doubled == base

    def test_tie_break_lowest_class_index(self):
        spec = entity_spec("A", "B")
        # one pipeline says A, one says B on the same token, same score
        a = entity_predictions("a", spec, [[1]])
        b = entity_predictions("b", spec, [[2]])
        cfg = EnsembleConfig(tie_break=TieBreak.LOWEST_CLASS_INDEX)
        result = ensemble_entities([a, b], spec, cfg)
        assert result[0][0].class_id == "A"

    def test_tie_break_highest_mean_score(self):
        spec = entity_spec("A", "B")
        a = entity_predictions("a", spec, [[1]], peak=0.6)
        b = entity_predictions("b", spec, [[2]], peak=0.9)
        result = ensemble_entities([a, b], spec, EnsembleConfig())
        assert result[0][0].class_id == "B"


def _random_pipelines(rng: random.Random, spec, max_pipelines=4, max_tokens=6):
    n_pipelines = rng.randint(1, max_pipelines)
    n_tokens = rng.randint(1, max_tokens)
    pipelines = []
    for p in range(n_pipelines):
        sentences = [[rng.randint(0, spec.k - 1) for _ in range(n_tokens)]]
        peak = rng.choice([0.5, 0.7, 0.9])
        pipelines.append(entity_predictions(f"p{p}", spec, sentences, peak=peak))
    return pipelines


class TestOracleEquivalence:
    def test_random_instances_match_brute_force(self):
        rng = random.Random(20240817)
        checked = 0
        for _ in range(1000):
            k = rng.randint(2, 4)  # O plus up to 3 entity classes
            spec = entity_spec(*[f"C{i}" for i in range(1, k)])
            pipelines = _random_pipelines(rng, spec)
            cfg = EnsembleConfig(
                min_votes=rng.randint(1, 4),
                tie_break=rng.choice([TieBreak.HIGHEST_MEAN_SCORE, TieBreak.LOWEST_CLASS_INDEX]),
            )
            got = ensemble_entities(pipelines, spec, cfg)
            decoded = [
                [(s.start, s.end, s.class_id, s.score) for s in pl.decoded_spans[0]]
                for pl in pipelines
            ]
            want = oracle_ensemble_sentence(decoded, list(spec.class_ids), cfg.min_votes, cfg.tie_break.value)
            assert [(s.start, s.end, s.class_id, s.score) for s in got[0]] == want
            checked += 1
        assert checked == 1000


class TestEnsembleRelations:
    def _pipelines(self, spec, labels_per_pipeline, peaks=None):
        pipelines = []
        for pi, labels in enumerate(labels_per_pipeline):
            peak = peaks[pi] if peaks else 0.9
            vectors = tuple(onehotish(spec.k, spec.index_of(l), peak) for l in labels)
            pipelines.append(
                PredictionSet(f"p{pi}", TaskKind.RELATION, spec.class_ids, instance_probs=vectors)
            )
        return pipelines

    def test_plurality(self):
        spec = relation_spec("A", "B")
        pipelines = self._pipelines(spec, [["A"], ["A"], ["B"]])
        assert ensemble_relations(pipelines, spec) == ("A",)

    def test_tie_broken_by_mean_probability(self):
        spec = relation_spec("A", "B")
        # pipeline 0 votes A weakly, pipeline 1 votes B strongly
        p0 = PredictionSet("p0", TaskKind.RELATION, spec.class_ids, instance_probs=(ProbVector((0.6, 0.4)),))
        p1 = PredictionSet("p1", TaskKind.RELATION, spec.class_ids, instance_probs=(ProbVector((0.1, 0.9)),))
        # mean prob: A = .35, B = .65 -> B wins the 1-1 tie
        assert ensemble_relations([p0, p1], spec) == ("B",)

    def test_exact_tie_falls_back_to_class_index(self):
        spec = relation_spec("A", "B")
        p0 = PredictionSet("p0", TaskKind.RELATION, spec.class_ids, instance_probs=(ProbVector((0.9, 0.1)),))
        p1 = PredictionSet("p1", TaskKind.RELATION, spec.class_ids, instance_probs=(ProbVector((0.1, 0.9)),))
        assert ensemble_relations([p0, p1], spec) == ("A",)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(7)
        for _ in range(300):
            k = rng.randint(1, 4)
            spec = relation_spec(*[f"r{i}" for i in range(k)])
            n_pipelines = rng.randint(1, 5)
            n_instances = rng.randint(1, 4)
            pipelines = []
            for p in range(n_pipelines):
                vectors = []
                for _ in range(n_instances):
                    weights = [rng.random() + 1e-9 for _ in range(k)]
                    total = sum(weights)
                    vectors.append(ProbVector(tuple(w / total for w in weights)))
                pipelines.append(
                    PredictionSet(f"p{p}", TaskKind.RELATION, spec.class_ids, instance_probs=tuple(vectors))
                )
            got = ensemble_relations(pipelines, spec)
            for i in range(n_instances):
                want = oracle_relation_vote(
                    [pl.decoded_labels[i] for pl in pipelines],
                    [list(pl.instance_probs[i].values) for pl in pipelines],
                    list(spec.class_ids),
                )
                assert got[i] == want

    def test_mismatched_instance_counts_rejected(self):
        spec = relation_spec("A", "B")
        p0 = self._pipelines(spec, [["A", "B"]])[0]
        p1 = self._pipelines(spec, [["A"]])[0]
        with pytest.raises(CorpusMismatch):
            ensemble_relations([p0, p1], spec)

    def test_entity_sets_rejected(self):
        spec = entity_spec("A")
        pipeline = entity_predictions("p", spec, [[1]])
        with pytest.raises(ValidationError):
            ensemble_relations([pipeline], spec)
