import json

import pytest
from hypothesis import given, strategies as st

from fairgate.errors import ScaleRangeError, TaxonomyError, UnknownCategoryError
from fairgate.taxonomy import (
    CanonicalScore,
    CueKind,
    CueReport,
    GenderCue,
    GenderLabel,
    ScoreScale,
    classify_category,
    denormalize_score,
    dump_taxonomy,
    get_scale,
    load_taxonomy,
    normalize_score,
    parse_gender_label,
    partition_cues,
)

# One row per category: kind plus the exact description of the bundled taxonomy.
EXPECTED_TAXONOMY = {
    "C1": (CueKind.EXPLICIT, "Gendered pronouns that directly indicate gender."),
    "C2": (CueKind.EXPLICIT, "Gender-fixed kinship nouns inherently tied to gender."),
    "C3": (CueKind.EXPLICIT, "Gendered noun pairs with lexical gender distinction."),
    "C4": (CueKind.EXPLICIT, "Titles or honorifics with explicit gender marking."),
    "C5": (CueKind.EXPLICIT, "Speaker-gender-marking expressions that encode the speaker’s gender directly."),
    "C6": (CueKind.EXPLICIT, "Gender agreement requirements where morphological forms must match gender."),
    "C7": (CueKind.AMBIGUOUS, "Gender-neutral occupation or role nouns without gender information in the source."),
    "C8": (CueKind.AMBIGUOUS, "Gender-neutral pronouns or indefinites."),
    "C9": (CueKind.AMBIGUOUS, "Gender-unknown proper names where gender cannot be reliably inferred."),
    "C10": (CueKind.AMBIGUOUS, "Subject omission or passive constructions where agent gender is unspecified."),
    "C11": (CueKind.AMBIGUOUS, "Neutral relation nouns that do not encode gender."),
    "C12": (CueKind.AMBIGUOUS, "Generic or plural group references without gender specification."),
}


class TestTaxonomyTable:
    def test_exactly_twelve_entries(self):
        categories = load_taxonomy()
        assert len(categories) == 12
        assert {c.code for c in categories} == set(EXPECTED_TAXONOMY)

    def test_kinds_and_descriptions_match(self):
        for category in load_taxonomy():
            kind, description = EXPECTED_TAXONOMY[category.code]
            assert category.kind is kind
            assert category.description == description
            assert category.kind is classify_category(category.code)
            assert category.examples

    def test_round_trip(self, tmp_path):
        categories = load_taxonomy()
        path = tmp_path / "taxonomy.json"
        dump_taxonomy(categories, path)
        assert load_taxonomy(path) == categories

    def test_incomplete_taxonomy_rejected(self, tmp_path):
        payload = [
            {"code": f"C{i}", "kind": "explicit" if i <= 6 else "ambiguous", "description": "d"}
            for i in range(1, 12)  # C12 missing
        ]
        path = tmp_path / "short.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(TaxonomyError):
            load_taxonomy(path)

    def test_kind_mismatch_rejected(self, tmp_path):
        payload = [
            {"code": f"C{i}", "kind": "ambiguous", "description": "d"} for i in range(1, 13)
        ]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(TaxonomyError):
            load_taxonomy(path)


class TestClassifyCategory:
    @pytest.mark.parametrize("code,kind", [
        ("C1", CueKind.EXPLICIT),
        ("C6", CueKind.EXPLICIT),
        ("C7", CueKind.AMBIGUOUS),
        ("C12", CueKind.AMBIGUOUS),
        ("c3", CueKind.EXPLICIT),
        (" c10 ", CueKind.AMBIGUOUS),
    ])
    def test_known_codes(self, code, kind):
        assert classify_category(code) is kind

    @pytest.mark.parametrize("bad", ["C13", "C0", "X1", "", "C"])
    def test_unknown_codes(self, bad):
        with pytest.raises(UnknownCategoryError) as excinfo:
            classify_category(bad)
        assert excinfo.value.token == bad.strip()


class TestCues:
    def test_partition_examples(self):
        explicit = GenderCue("he", "el", CueKind.EXPLICIT)
        ambiguous = GenderCue("doctor", "medico", CueKind.AMBIGUOUS)
        amb, exp = partition_cues(CueReport((explicit, ambiguous)))
        assert amb == [ambiguous]
        assert exp == [explicit]

    def test_partition_empty(self):
        assert partition_cues(CueReport()) == ([], [])

    def test_partition_all_ambiguous_keeps_order(self):
        first = GenderCue("a", "b", CueKind.AMBIGUOUS)
        second = GenderCue("c", "d", CueKind.AMBIGUOUS)
        amb, exp = partition_cues(CueReport((first, second)))
        assert amb == [first, second]
        assert exp == []

    @given(st.lists(st.sampled_from([CueKind.AMBIGUOUS, CueKind.EXPLICIT]), max_size=30))
    def test_partition_disjoint_and_exhaustive(self, kinds):
        cues = tuple(GenderCue(f"s{i}", f"t{i}", k) for i, k in enumerate(kinds))
        amb, exp = partition_cues(CueReport(cues))
        assert sorted(amb + exp, key=id) == sorted(cues, key=id)
        assert not (set(map(id, amb)) & set(map(id, exp)))

    def test_cue_requires_a_span(self):
        with pytest.raises(ValueError):
            GenderCue(None, None, CueKind.AMBIGUOUS)
        GenderCue("only-source", None, CueKind.AMBIGUOUS)
        GenderCue(None, "only-target", CueKind.EXPLICIT)

    def test_cue_category_kind_must_agree(self):
        categories = {c.code: c for c in load_taxonomy()}
        GenderCue("a", "b", CueKind.AMBIGUOUS, categories["C7"])
        with pytest.raises(ValueError):
            GenderCue("a", "b", CueKind.AMBIGUOUS, categories["C1"])

    def test_empty_report_is_representable(self):
        report = CueReport()
        assert report.is_empty
        assert report.ambiguous == ()
        assert report.explicit == ()

    def test_gender_label_parsing(self):
        assert parse_gender_label("feminine") is GenderLabel.FEMININE
        assert parse_gender_label("MASCULINE") is GenderLabel.MASCULINE
        assert parse_gender_label(" Neutral ") is GenderLabel.NEUTRAL
        assert parse_gender_label("androgynous") is None


class TestScales:
    def test_normalize_identity_scale(self):
        assert float(normalize_score(0.7605, get_scale("cometkiwi"))) == 0.7605

    def test_normalize_mqm_scale(self):
        assert float(normalize_score(95, get_scale("mqm100"))) == pytest.approx(0.95, abs=1e-12)

    def test_normalize_reflected_scale_worst_is_zero(self):
        assert float(normalize_score(25, get_scale("metricx"))) == 0.0
        assert float(normalize_score(0, get_scale("metricx"))) == 1.0
        assert float(normalize_score(5.0, get_scale("metricx"))) == pytest.approx(0.8, abs=1e-12)

    def test_clamp_tolerance(self):
        scale = get_scale("cometkiwi")
        assert float(normalize_score(1.0 + 5e-10, scale)) == 1.0
        assert float(normalize_score(-5e-10, scale)) == 0.0
        with pytest.raises(ScaleRangeError):
            normalize_score(1.0 + 1e-8, scale)
        with pytest.raises(ScaleRangeError):
            normalize_score(-1e-8, scale)

    def test_denormalize_examples(self):
        assert denormalize_score(0.5, get_scale("mqm100")) == pytest.approx(50.0, abs=1e-12)
        assert denormalize_score(1.0, get_scale("metricx")) == pytest.approx(0.0, abs=1e-12)
        assert denormalize_score(0.7605, get_scale("cometkiwi")) == pytest.approx(0.7605, abs=1e-15)

    def test_denormalize_rejects_out_of_range(self):
        with pytest.raises(ScaleRangeError):
            denormalize_score(1.2, get_scale("mqm100"))

    def test_scale_requires_increasing_bounds(self):
        with pytest.raises(ValueError):
            ScoreScale("backwards", 1.0, 0.0)

    def test_unknown_scale_name(self):
        with pytest.raises(ScaleRangeError):
            get_scale("no-such-scale")


scales = st.tuples(
    st.floats(min_value=-100.0, max_value=99.0),
    st.floats(min_value=1e-2, max_value=100.0),
    st.booleans(),
).map(lambda t: ScoreScale("prop", t[0], t[0] + t[1], t[2]))


class TestScaleProperties:
    @given(scale=scales, fraction=st.floats(min_value=0.0, max_value=1.0))
    def test_round_trip_within_tolerance(self, scale, fraction):
        raw = scale.raw_min + fraction * (scale.raw_max - scale.raw_min)
        assert abs(denormalize_score(normalize_score(raw, scale), scale) - raw) <= 1e-12

    @given(
        scale=scales,
        f1=st.floats(min_value=0.0, max_value=1.0),
        f2=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_strict_monotonicity(self, scale, f1, f2):
        span = scale.raw_max - scale.raw_min
        lo, hi = sorted((f1, f2))
        raw_lo = scale.raw_min + lo * span
        raw_hi = scale.raw_min + hi * span
        if raw_hi - raw_lo < 1e-9:
            return
        n_lo = float(normalize_score(raw_lo, scale))
        n_hi = float(normalize_score(raw_hi, scale))
        if scale.higher_is_better:
            assert n_lo < n_hi
        else:
            assert n_lo > n_hi


class TestCanonicalScore:
    def test_bounds_enforced(self):
        assert float(CanonicalScore(0.0)) == 0.0
        assert float(CanonicalScore(1.0)) == 1.0
        for bad in (1.0000001, -0.0000001, float("nan"), float("inf")):
            with pytest.raises(ScaleRangeError):
                CanonicalScore(bad)

    def test_behaves_like_float(self):
        score = CanonicalScore(0.75)
        assert score * 2 == 1.5
        assert score < CanonicalScore(0.8)
