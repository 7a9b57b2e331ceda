import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verbseq.corpus import (CATEGORIES, TENSES, corpus_transitions, dumps_corpus,
                            tabulate_distributions, validate_corpus)
from verbseq.errors import InvalidSpec
from verbseq.synth import (PAIRS, REGIME_NAMES, Regime, RegimeSpec, default_paper_spec,
                           expected_sentences, generate_corpus, implied_marginals,
                           load_spec, read_sidecar, write_sidecar)

CENTERS = {"C": ("sta", "IM"), "CA": ("act", "inf"), "AA": ("acc", "PC"), "IC": ("ach", "ppr")}


def hand_implied_categories(spec):
    """Category marginals of the bundled spec derived by hand.

    Every regime of the bundled spec draws each verb from the same law:
    its center pair kept with probability delta, otherwise the category
    (half the time) or the tense is re-drawn from the noise marginals.
    Regime weights are expected sentences per text (sentence length does
    not depend on the regime).
    """
    # part 1 of 1/2/3 sentences: all but the last sentence are C, the last is CA
    # unless part 1 is a single sentence
    weights = {"C": 0.5 * 1 + 0.3 * 1 + 0.2 * 2, "CA": 0.3 + 0.2,
               "AA": 0.5 * 1 + 0.3 * 2 + 0.2 * 3, "IC": 0.5 * (0.2 * 2 + 0.4 * 3 + 0.4 * 4)}
    noise = dict(zip(CATEGORIES, spec.noise_categories))
    d = spec.delta
    out = dict.fromkeys(CATEGORIES, 0.0)
    for name, w in weights.items():
        center = CENTERS[name][0]
        for c in CATEGORIES:
            keep = 1.0 if c == center else 0.0
            out[c] += w * (d * keep + (1 - d) * (0.5 * noise[c] + 0.5 * keep))
    total = sum(weights.values())
    return {c: v / total for c, v in out.items()}


def point_mass_spec():
    """delta = 1, part-1 regimes emit exactly (sta, IM) -> (acc, inf)."""
    base = default_paper_spec()
    pattern = dict(first={"sta:IM": 1.0}, rows={"sta:IM": {"acc:inf": 1.0}},
                   default={"sta:IM": 1.0})
    regimes = (Regime.from_patterns("C", **pattern), Regime.from_patterns("CA", **pattern),
               *base.regimes[2:])
    return base.replace(regimes=regimes, delta=1.0, verbs_per_sentence={2: 1.0})


class TestDefaultSpec:
    def test_category_marginals(self):
        cats, _ = implied_marginals(default_paper_spec())
        for c, target in {"sta": 0.24, "act": 0.10, "acc": 0.34, "ach": 0.32}.items():
            assert abs(cats[c] - target) <= 0.02

    def test_tense_marginals(self):
        _, tenses = implied_marginals(default_paper_spec())
        assert abs(tenses["IM"] - 0.24) <= 0.02 and abs(tenses["PC"] - 0.34) <= 0.02

    def test_matches_hand_derivation(self):
        spec = default_paper_spec()
        cats, _ = implied_marginals(spec)
        hand = hand_implied_categories(spec)
        for c in CATEGORIES:
            assert cats[c] == pytest.approx(hand[c], abs=1e-12)

    def test_expected_sentences(self):
        assert np.allclose(expected_sentences(default_paper_spec()), [1.2, 0.5, 1.7, 1.6])

    def test_valid(self):
        spec = default_paper_spec()
        assert [r.name for r in spec.regimes] == list(REGIME_NAMES)
        for r in range(4):
            assert np.allclose(spec.effective_transition(r).sum(axis=1), 1.0)
            assert spec.effective_first(r).sum() == pytest.approx(1.0)


class TestGeneration:
    def test_deterministic(self):
        spec = default_paper_spec()
        a, ta = generate_corpus(spec, 20, 3)
        b, tb = generate_corpus(spec, 20, 3)
        sa, sb = io.StringIO(), io.StringIO()
        write_sidecar(ta, sa)
        write_sidecar(tb, sb)
        assert dumps_corpus(a) == dumps_corpus(b) and sa.getvalue() == sb.getvalue()

    def test_seed_matters(self):
        spec = default_paper_spec()
        assert dumps_corpus(generate_corpus(spec, 10, 1)[0]) != \
            dumps_corpus(generate_corpus(spec, 10, 2)[0])

    def test_valid_corpus(self, synthetic):
        corpus, _ = synthetic
        assert len(corpus.texts) == 100
        assert validate_corpus(dumps_corpus(corpus)) == []

    def test_part_order(self, synthetic):
        corpus, truth = synthetic
        for text in corpus.texts:
            parts = [truth.sentence_parts[text.text_id, s.sent_id] for s in text.sentences]
            assert parts == sorted(parts) and parts[0] == 1 and 2 in parts
            assert all(t.part == parts[i] for i, s in enumerate(text.sentences)
                       for t in s.tokens)

    def test_sidecar_covers_windows(self, synthetic):
        corpus, truth = synthetic
        buf = io.StringIO()
        write_sidecar(truth, buf)
        buf.seek(0)
        regimes = read_sidecar(buf)
        assert set(regimes) == {s.source for s in corpus_transitions(corpus)}
        assert set(regimes.values()) == set(REGIME_NAMES)

    def test_point_mass_pattern(self):
        corpus, truth = generate_corpus(point_mass_spec(), 30, 0)
        part1 = [s for s in corpus_transitions(corpus)
                 if truth.sentence_parts[s.source[:2]] == 1]
        assert part1 and all(s.decoded == (("sta", "IM"), ("acc", "inf")) for s in part1)

    def test_corpus_marginals_near_implied(self, synthetic):
        corpus, _ = synthetic
        cats, _ = implied_marginals(default_paper_spec())
        got = tabulate_distributions(corpus).category_percent
        for c in CATEGORIES:
            assert abs(got[c] - 100 * cats[c]) <= 4

    def test_large_sample_converges(self):
        spec = default_paper_spec()
        corpus, _ = generate_corpus(spec, 500, 0)
        cats, tenses = implied_marginals(spec)
        tables = tabulate_distributions(corpus)
        for c in CATEGORIES:
            assert abs(tables.category_percent[c] - 100 * cats[c]) <= 2
        for t in TENSES:
            assert abs(tables.tense_percent[t] - 100 * tenses[t]) <= 2


class TestSpecIo:
    def test_round_trip(self, tmp_path):
        spec = default_paper_spec()
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec.to_dict()))
        again = load_spec(path)
        assert again.delta == spec.delta
        for a, b in zip(again.regimes, spec.regimes):
            assert np.array_equal(a.transition, b.transition) and a.ground == b.ground
        assert dumps_corpus(generate_corpus(again, 5, 0)[0]) == \
            dumps_corpus(generate_corpus(spec, 5, 0)[0])

    def test_unnormalized(self):
        data = default_paper_spec().to_dict()
        data["regimes"][0]["ground"]["back"] = 0.9
        with pytest.raises(InvalidSpec):
            RegimeSpec.from_dict(data)

    def test_missing_key(self):
        data = default_paper_spec().to_dict()
        del data["delta"]
        with pytest.raises(InvalidSpec):
            RegimeSpec.from_dict(data)

    @pytest.mark.parametrize("change", [{"delta": 1.5}, {"comment_probability": -0.1},
                                        {"verbs_per_sentence": {1: 1.0}}])
    def test_bad_values(self, change):
        with pytest.raises(InvalidSpec):
            default_paper_spec().replace(**change)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 3))
def test_effective_laws_normalized_property(delta, r):
    spec = default_paper_spec().replace(delta=delta)
    assert np.allclose(spec.effective_transition(r).sum(axis=1), 1.0)
    assert spec.effective_first(r).sum() == pytest.approx(1.0)
    assert (spec.effective_transition(r) >= 0).all()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_generated_pairs_known_property(seed, n):
    corpus, truth = generate_corpus(default_paper_spec(), n, seed)
    assert len(corpus.texts) == n
    assert all(t.pair in PAIRS for t in corpus.tokens)
    assert len(truth.windows) == len(corpus_transitions(corpus))
