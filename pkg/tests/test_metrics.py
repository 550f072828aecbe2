import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dbcasplit.errors import ValidationError
from dbcasplit.metrics import ChrfConfig, chrf, generalisation_score, mean

FIXTURE = json.loads((Path(__file__).parent / "data" / "chrf_fixture.json").read_text(encoding="utf-8"))
HYPS = [p["hypothesis"] for p in FIXTURE["pairs"]]
REFS = [p["reference"] for p in FIXTURE["pairs"]]

# averaged chrF2++ of the max- and min-divergence systems per target language
REPORTED = {"de": (50.12, 54.23), "fr": (57.13, 60.11), "el": (53.77, 57.05), "fi": (48.30, 50.48)}
RATIOS = {"de": 0.92, "fr": 0.95, "el": 0.94, "fi": 0.96}


def test_fixture_corpus_score():
    assert abs(chrf(HYPS, REFS) - FIXTURE["chrf2pp_corpus"]) < 0.01
    assert abs(chrf(HYPS, REFS, ChrfConfig(word_ngram_max=0)) - FIXTURE["chrf2_corpus"]) < 0.01


def test_fixture_segment_scores():
    for h, r, expected in zip(HYPS, REFS, FIXTURE["chrf2pp_segments"]):
        assert abs(chrf([h], [r]) - expected) < 0.01


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="abcdefg .,!", min_size=1, max_size=40).filter(lambda s: s.strip()))
def test_identity_is_100(text):
    assert chrf([text], [text]) == pytest.approx(100.0, abs=1e-9)


def test_disjoint_is_zero():
    assert chrf(["abc def"], ["xyz uvw"]) == 0.0


def test_recall_weighting_direction():
    short, full = "the cat", "the cat sat on the mat"
    assert chrf([short], [full]) < chrf([full], [short])
    balanced = ChrfConfig(beta=1.0)
    assert chrf([short], [full], balanced) == pytest.approx(chrf([full], [short], balanced))


def test_surrounding_whitespace_ignored():
    assert chrf(["  " + h + " " for h in HYPS], REFS) == chrf(HYPS, REFS)
    assert chrf(HYPS, [r + "\t" for r in REFS]) == chrf(HYPS, REFS)


def test_empty_reference_defined():
    assert chrf([""], [""]) == 0.0
    assert 0.0 <= chrf(["a", "hello"], ["", "hello"]) <= 100.0


def test_length_mismatch_and_empty_input():
    with pytest.raises(ValidationError):
        chrf(["a"], ["a", "b"])
    with pytest.raises(ValidationError):
        chrf([], [])


def test_reported_generalisation_ratios():
    report = generalisation_score({k: v[1] for k, v in REPORTED.items()}, {k: v[0] for k, v in REPORTED.items()})
    for lang, ratio in RATIOS.items():
        assert round(report[lang].generalisation_score, 2) == ratio
        assert report[lang].chrf_max_split == REPORTED[lang][0]
        assert report[lang].chrf_min_split == REPORTED[lang][1]
    assert [row[0] for row in report.rows()] == sorted(RATIOS)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 100.0), st.floats(1.0, 100.0), st.floats(0.01, 100.0))
def test_ratio_scale_free(lo, hi, k):
    a = generalisation_score({"x": lo}, {"x": hi})["x"].generalisation_score
    b = generalisation_score({"x": lo * k}, {"x": hi * k})["x"].generalisation_score
    assert abs(a - b) <= 1e-12 * max(1.0, a)


def test_equal_scores_ratio_one():
    assert generalisation_score({"de": 40.0}, {"de": 40.0})["de"].generalisation_score == 1.0


def test_generalisation_errors():
    with pytest.raises(ValidationError):
        generalisation_score({"de": 0.0}, {"de": 10.0})
    with pytest.raises(ValidationError):
        generalisation_score({"de": 10.0}, {"fr": 10.0})
    with pytest.raises(ValidationError):
        mean([])


def test_config_validation():
    with pytest.raises(ValueError):
        ChrfConfig(char_ngram_max=0)
    with pytest.raises(ValueError):
        ChrfConfig(beta=0)
