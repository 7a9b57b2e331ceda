import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import chi2_sf_quadrature, pearson_loops
from pipeline import fit, majority_regimes
from verbseq.analysis import (NONE_CLUSTER, ContingencyTable, LabeledTransition, Span,
                              assign_transitions, association_test, crosstab,
                              format_pattern, none_share, segment_text, sentence_labels,
                              span_boundaries, typical_pairs)
from verbseq.clusterer import UnitClustering, cluster_units
from verbseq.corpus import (PAIR_DIM, Corpus, VerbToken, corpus_transitions,
                            extract_sequences, sample_matrix)
from verbseq.errors import DegenerateTable, EmptyInput
from verbseq.markov import bmu_sequences, empirical_transitions
from verbseq.som import SomMap, SomSchedule, hit_histogram, train_som


def fixed_clustering(labels):
    labels = np.asarray(labels)
    return UnitClustering(int(labels.max()) + 1, labels, (), 0.0, {})


def text_of(sentences, text_id="t"):
    """``sentences`` is a list of per-sentence lists of (category, tense)."""
    return [VerbToken(text_id, s, p, c, t)
            for s, sent in enumerate(sentences) for p, (c, t) in enumerate(sent)]


def labeled(cluster, part=1, sent=0, pos=0, **flags):
    toks = tuple(VerbToken("t", sent, pos + i, "sta", "IM", part=part, **flags)
                 for i in range(2))
    return LabeledTransition(("t", sent, pos), (("sta", "IM"), ("sta", "IM")), 0, cluster, toks)


class TestAssign:
    def test_example_window_count(self, example_corpus):
        som = train_som(corpus_transitions(example_corpus), 2, 2, epochs=5)
        out = assign_transitions(example_corpus, som, fixed_clustering([0, 0, 1, 1]))
        assert len(out) == 4
        assert [t.source[1] for t in out] == [0, 1, 2, 2]

    def test_single_prototype(self, example_corpus):
        x = sample_matrix(corpus_transitions(example_corpus))
        som = SomMap(1, 1, x[:1], SomSchedule())
        out = assign_transitions(example_corpus, som, fixed_clustering([0]))
        assert {t.cluster for t in out} == {0} and {t.unit for t in out} == {0}

    def test_empty_corpus(self, example_corpus):
        som = train_som(corpus_transitions(example_corpus), 1, 2, epochs=1)
        assert assign_transitions(Corpus(), som, fixed_clustering([0, 1])) == []

    def test_cluster_is_bmu_label(self, synthetic):
        corpus, _ = synthetic
        x = sample_matrix(corpus_transitions(corpus))
        som = train_som(x, 3, 3, epochs=10)
        clustering = cluster_units(som.prototypes, hit_histogram(som, x), k=3)
        for t in assign_transitions(corpus, som, clustering):
            lab = clustering.unit_labels[t.unit]
            assert t.cluster == (NONE_CLUSTER if lab < 0 else lab)

    def test_none_cluster(self, example_corpus):
        x = sample_matrix(corpus_transitions(example_corpus))
        far = np.full((1, PAIR_DIM), 10.0)
        som = SomMap(1, 2, np.vstack([x[:1], far]), SomSchedule())
        out = assign_transitions(example_corpus, som, UnitClustering(1, np.array([-1, 0]),
                                                                     (), 0.0, {}))
        assert none_share(out) == 1.0


class TestSegmentation:
    def _text(self, cluster_per_sentence):
        toks = text_of([[("sta", "IM")] * 2 for _ in cluster_per_sentence])
        corpus = Corpus(tuple(toks))
        trans = [labeled(c, sent=i) for i, c in enumerate(cluster_per_sentence)]
        return corpus.texts[0], trans

    def test_merge_rule(self):
        text, trans = self._text(["C", "C", "AA", "IC"])
        spans = segment_text(text, trans)
        assert spans == [Span(0, 1, "C"), Span(2, 2, "AA"), Span(3, 3, "IC")]
        assert span_boundaries(spans) == [2, 3]

    def test_single_sentence(self):
        text, trans = self._text([0])
        assert segment_text(text, trans) == [Span(0, 0, 0)]

    def test_windowless_sentence_joins_previous(self):
        toks = text_of([[("sta", "IM")] * 2, [("sta", "IM")], [("sta", "IM")] * 2])
        text = Corpus(tuple(toks)).texts[0]
        trans = [labeled(0, sent=0), labeled(1, sent=2)]
        assert sentence_labels(text, trans) == [0, None, 1]
        assert segment_text(text, trans) == [Span(0, 1, 0), Span(2, 2, 1)]

    def test_majority_tie_goes_to_earliest(self):
        toks = text_of([[("sta", "IM")] * 3])
        text = Corpus(tuple(toks)).texts[0]
        trans = [labeled(1, pos=0), labeled(0, pos=1)]
        assert sentence_labels(text, trans) == [1]


class TestCrosstab:
    def test_single_cell(self):
        tab = crosstab([labeled(0) for _ in range(3)], "part")
        assert tab.rows == (0,) and tab.cell(0, 1) == 100.0
        assert tab.counts.tolist() == [[6, 0, 0]] and tab.n_pairs.tolist() == [3]

    def test_position(self):
        t = LabeledTransition(("t", 0, 0), (("sta", "IM"), ("ach", "PC")), 0, 0,
                              (VerbToken("t", 0, 0, "sta", "IM"),
                               VerbToken("t", 0, 1, "ach", "PC")))
        assert crosstab([t], "tense", position=1).cell(0, "IM") == 100.0
        assert crosstab([t], "tense", position=2).cell(0, "PC") == 100.0
        assert crosstab([t], "tense").cell(0, "PC") == 50.0
        assert crosstab([t], "tense").cell(0, "PC", pairs=True) == 100.0

    def test_none_row_last(self):
        tab = crosstab([labeled(NONE_CLUSTER), labeled(1), labeled(0)], "causal")
        assert tab.rows == (0, 1, NONE_CLUSTER)

    def test_csv_and_format(self):
        tab = crosstab([labeled(0), labeled(1, part=2)], "part")
        csv = tab.to_csv().splitlines()
        assert csv[0].startswith("cluster,n_pairs,n_verbs,count_1,count_2,count_3,pct_1")
        assert csv[2].startswith("1,1,2,0,2,0,0.0000,100.0000")
        assert "crosstab: part" in tab.format()

    def test_errors(self):
        with pytest.raises(EmptyInput):
            crosstab([], "part")
        with pytest.raises(ValueError):
            crosstab([labeled(0)], "colour")
        with pytest.raises(ValueError):
            crosstab([labeled(0)], "part", position=3)


class TestAssociation:
    def test_independent(self):
        res = association_test(np.array([[10, 10], [10, 10]]))
        assert res.statistic == 0 and res.p_value == pytest.approx(1.0, abs=1e-15)

    def test_hand_case(self):
        res = association_test(np.array([[10, 0], [0, 10]]))
        assert res.statistic == pytest.approx(20.0, abs=1e-12) and res.dof == 1

    def test_matches_quadrature(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            table = rng.integers(1, 30, size=(3, 4))
            res = association_test(table)
            stat, dof = pearson_loops(table.tolist())
            assert res.statistic == pytest.approx(stat, rel=1e-12) and res.dof == dof
            assert abs(res.p_value - chi2_sf_quadrature(res.statistic, dof)) < 1e-6

    def test_zero_rows_dropped(self):
        res = association_test(np.array([[5, 5], [0, 0], [10, 1]]))
        assert res.dropped_rows == [1] and res.dof == 1 and "dropped" in res.warning

    def test_low_expected_warning(self):
        res = association_test(np.array([[1, 2], [3, 1]]))
        assert res.low_expected_cells == 4 and "expected count" in res.warning

    def test_degenerate(self):
        with pytest.raises(DegenerateTable):
            association_test(np.array([[5, 0], [7, 0]]))

    def test_accepts_contingency_table(self):
        tab = ContingencyTable("causal", None, (0, 1), (False, True),
                               np.array([[8, 2], [1, 9]]), np.array([5, 5]))
        assert association_test(tab).dof == 1


class TestTypicalPairs:
    def test_single_unit(self):
        proto = np.zeros((1, PAIR_DIM))
        proto[0, [0, 4, 13 + 2, 13 + 4 + 5]] = 1.0  # sta IM -> acc inf
        som = SomMap(1, 1, proto, SomSchedule())
        pairs = typical_pairs(som, fixed_clustering([0]), [7], np.ones((1, 1)))
        (p,) = pairs[0]
        assert p.pattern == (("sta", "IM"), ("acc", "inf")) and p.support == 7
        assert p.score == pytest.approx(2.0) and p.transition_prob == 1.0
        assert format_pattern(p.pattern) == "(sta, IM) -> (acc, inf)"

    def test_min_support_and_dedup(self):
        proto = np.zeros((3, PAIR_DIM))
        proto[:, [0, 4, 13, 17]] = 1.0  # all decode to the same pattern
        som = SomMap(1, 3, proto, SomSchedule())
        P = np.full((3, 3), 1 / 3)
        pairs = typical_pairs(som, fixed_clustering([0, 0, 0]), [1, 5, 2], P, min_support=2)
        assert [p.unit for p in pairs[0]] == [1]

    def test_bounds(self, synthetic):
        corpus, _ = synthetic
        x = sample_matrix(corpus_transitions(corpus))
        som = train_som(x, 4, 4, epochs=10)
        hits = hit_histogram(som, x)
        clustering = cluster_units(som.prototypes, hits, k=3)
        P = empirical_transitions(bmu_sequences(extract_sequences(corpus)[0], som), 16)
        for ps in typical_pairs(som, clustering, hits, P).values():
            for p in ps:
                assert p.support >= 1 and 0 <= p.transition_prob <= 1

    def test_planted_centers_rank_first(self, synthetic):
        # each regime's planted self-transition is its cluster's top pair
        corpus, truth = synthetic
        run = fit(corpus, seed=0)
        regimes = majority_regimes(run, truth)
        pairs = typical_pairs(run.som, run.clustering, run.hits, run.matrix)
        centers = {"C": ("sta", "IM"), "CA": ("act", "inf"), "AA": ("acc", "PC"),
                   "IC": ("ach", "ppr")}
        assert sorted(regimes.values()) == sorted(centers)
        for cluster, ps in pairs.items():
            center = centers[regimes[cluster]]
            assert ps[0].pattern == (center, center)

    def test_shape_mismatch(self):
        som = SomMap(1, 1, np.zeros((1, PAIR_DIM)), SomSchedule())
        with pytest.raises(ValueError):
            typical_pairs(som, fixed_clustering([0]), [1], np.ones((2, 2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 5))
def test_chi_square_permutation_invariant_property(seed, r, c):
    rng = np.random.default_rng(seed)
    table = rng.integers(1, 20, size=(r, c))
    a = association_test(table)
    b = association_test(table[rng.permutation(r)][:, rng.permutation(c)])
    assert b.statistic == pytest.approx(a.statistic, rel=1e-12) and a.dof == b.dof


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.sampled_from([1, 2, 3])), min_size=1,
                max_size=30))
def test_crosstab_rows_sum_property(items):
    tab = crosstab([labeled(c, part=p) for c, p in items], "part")
    assert np.allclose(tab.percentages.sum(axis=1), 100.0)
    assert tab.counts.sum() == 2 * len(items)
