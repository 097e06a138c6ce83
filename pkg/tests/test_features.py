from datetime import date

import numpy as np
import pytest

from gentnow import embeddings, topics
from gentnow.corpus import Listing, Review
from gentnow.features import (
    FeatureError, STRUCTURED_COLUMNS, UNSTRUCTURED_SCALARS, assemble_matrix,
    build_feature_vectors, feature_columns, structured_features,
    unstructured_features,
)

TRAIN_TEXTS = [
    "great location near the park and the subway",
    "lovely walk to the restaurant quarter",
    "clean comfortable bed and a spacious room",
    "the kitchen was modern and the shower was hot",
    "wonderful host and a quiet neighborhood",
    "close to the station with shops everywhere",
] * 5


@pytest.fixture(scope="module")
def fitted_models():
    from gentnow import textprep
    tokens = [textprep.preprocess(t).tokens for t in TRAIN_TEXTS]
    tm = topics.fit_lda(tokens, 2, alpha=0.1, beta=0.01, iterations=60,
                        burn_in=20, seed=0, min_count=1)
    em = embeddings.fit_embeddings(tokens, dim=5, epochs=5, min_count=1, seed=1)
    return tm, em


def _listing(lid, nb, price=80.0, bedrooms=1.0, star=4.5, loc_star=9.0, sub=()):
    return Listing(lid, nb, price, bedrooms, star, loc_star, tuple(sub))


def _review(rid, lid, text):
    return Review(rid, lid, text, date(2014, 5, 1), "en")


class TestStructuredFeatures:
    def test_mean_price(self):
        listings = [_listing("L1", "A", price=80.0), _listing("L2", "A", price=100.0)]
        fv = structured_features(listings, [], "A")
        assert fv.price_mean == pytest.approx(90.0)
        assert fv.n_listings == 2

    def test_missing_star_excluded_and_counted(self):
        listings = [_listing("L1", "A", star=4.0), _listing("L2", "A", star=None)]
        fv = structured_features(listings, [], "A")
        assert fv.star_rating_mean == pytest.approx(4.0)
        assert fv.missing_counts["star_rating"] == 1

    def test_reviews_counted_via_listing_join(self):
        listings = [_listing("L1", "A"), _listing("L2", "B")]
        reviews = [_review("R1", "L1", "x"), _review("R2", "L1", "y"),
                   _review("R3", "L2", "z")]
        fv = structured_features(listings, reviews, "A")
        assert fv.n_reviews == 2

    def test_subrating_means(self):
        listings = [_listing("L1", "A", sub=[("cleanliness", 9.0)]),
                    _listing("L2", "A", sub=[("cleanliness", 10.0)])]
        fv = structured_features(listings, [], "A")
        assert fv.subrating_means == {"cleanliness": pytest.approx(9.5)}


class TestUnstructuredFeatures:
    def test_no_reviews_gives_nothing(self, fitted_models, dictionary, lexicon):
        tm, em = fitted_models
        assert unstructured_features([], dictionary, lexicon, tm, em) == {}

    def test_single_review_features_equal_review_values(self, fitted_models,
                                                        dictionary, lexicon):
        from gentnow import sentiment, textprep
        tm, em = fitted_models
        text = "great location near the park and the subway"
        got = unstructured_features([text], dictionary, lexicon, tm, em)
        tok = textprep.preprocess(text)
        assert got["review_length_mean"] == tok.raw_word_count
        assert got["location_words_pct"] == pytest.approx(
            textprep.location_word_fraction(tok, dictionary))
        assert got["sentiment_mean"] == pytest.approx(
            sentiment.score_sentiment(text, lexicon))
        assert got["location_sentiment_mean"] == pytest.approx(got["sentiment_mean"])
        np.testing.assert_allclose(got["topic_means"],
                                   topics.infer_topics(tm, tok.tokens))

    def test_topic_means_on_simplex(self, fitted_models, dictionary, lexicon):
        tm, em = fitted_models
        got = unstructured_features(TRAIN_TEXTS[:7], dictionary, lexicon, tm, em)
        assert got["topic_means"].sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(got["topic_means"] >= 0)

    def test_duplicating_reviews_preserves_means(self, fitted_models,
                                                 dictionary, lexicon):
        tm, em = fitted_models
        texts = TRAIN_TEXTS[:4]
        once = unstructured_features(texts, dictionary, lexicon, tm, em)
        twice = unstructured_features(texts + texts, dictionary, lexicon, tm, em)
        for key in ("review_length_mean", "location_words_pct", "sentiment_mean"):
            assert twice[key] == pytest.approx(once[key])
        np.testing.assert_allclose(twice["topic_means"], once["topic_means"])
        np.testing.assert_allclose(twice["embedding_means"], once["embedding_means"])

    def test_order_invariance(self, fitted_models, dictionary, lexicon):
        tm, em = fitted_models
        texts = TRAIN_TEXTS[:5]
        fwd = unstructured_features(texts, dictionary, lexicon, tm, em)
        rev = unstructured_features(texts[::-1], dictionary, lexicon, tm, em)
        assert fwd["sentiment_mean"] == pytest.approx(rev["sentiment_mean"])
        np.testing.assert_allclose(fwd["embedding_means"], rev["embedding_means"])


class TestAssembleMatrix:
    def _vectors(self, fitted_models, dictionary, lexicon, n=6, reviews_for_all=True):
        tm, em = fitted_models
        listings, reviews = [], []
        for i in range(n):
            nb = f"N{i}"
            for j in range(3):
                listings.append(_listing(f"L{nb}_{j}", nb, price=50.0 + 10 * i))
            if reviews_for_all or i > 0:
                reviews.append(_review(f"R{nb}", f"L{nb}_0", TRAIN_TEXTS[i]))
        fvs = build_feature_vectors(listings, reviews, {f"N{i}" for i in range(n)},
                                    dictionary, lexicon, tm, em)
        targets = {f"N{i}": float(i) for i in range(n)}
        return fvs, targets

    def test_selector_partition(self, fitted_models, dictionary, lexicon):
        fvs, targets = self._vectors(fitted_models, dictionary, lexicon)
        mats = {sel: assemble_matrix(fvs, targets, sel, 2, 5) for sel in
                ("structured", "unstructured", "all")}
        s, u, a = (mats[k].columns for k in ("structured", "unstructured", "all"))
        assert set(s) & set(u) == set()
        assert s + u == a
        assert len(s) == 6
        assert mats["all"].X.shape[1] == len(s) + len(u)
        assert list(s) == list(STRUCTURED_COLUMNS)
        assert u[:4] == list(UNSTRUCTURED_SCALARS)

    def test_column_count_from_k_and_d(self):
        assert len(feature_columns("all", 3, 7)) == 6 + 4 + 3 + 7

    def test_missing_cells_imputed_with_median_and_flagged(self, fitted_models,
                                                           dictionary, lexicon):
        fvs, targets = self._vectors(fitted_models, dictionary, lexicon,
                                     reviews_for_all=False)
        matrix = assemble_matrix(fvs, targets, "all", 2, 5)
        imputed_cols = {c for _, c in matrix.imputed}
        assert ("N0", "review_length_mean") in matrix.imputed
        assert "review_length_mean" in imputed_cols
        j = matrix.columns.index("review_length_mean")
        others = [matrix.X[i, j] for i, nb in enumerate(matrix.neighborhood_ids)
                  if nb != "N0"]
        i0 = matrix.neighborhood_ids.index("N0")
        assert matrix.X[i0, j] == pytest.approx(float(np.median(others)))

    def test_orphan_targets_warn(self, fitted_models, dictionary, lexicon):
        fvs, targets = self._vectors(fitted_models, dictionary, lexicon)
        targets["GHOST"] = 1.0
        with pytest.warns(UserWarning, match="GHOST"):
            matrix = assemble_matrix(fvs, targets, "all", 2, 5)
        assert "GHOST" not in matrix.neighborhood_ids

    def test_unknown_selector_rejected(self, fitted_models, dictionary, lexicon):
        fvs, targets = self._vectors(fitted_models, dictionary, lexicon)
        with pytest.raises(FeatureError):
            assemble_matrix(fvs, targets, "everything", 2, 5)

    def test_subratings_included_on_request(self, fitted_models, dictionary, lexicon):
        tm, em = fitted_models
        listings = [_listing(f"L{j}", "A", sub=[("cleanliness", 9.0)]) for j in range(3)]
        reviews = [_review("R1", "L0", TRAIN_TEXTS[0])]
        fvs = build_feature_vectors(listings, reviews, {"A"}, dictionary, lexicon, tm, em)
        m = assemble_matrix(fvs, {"A": 1.0}, "structured", 2, 5, include_subratings=True)
        assert "subrating_cleanliness" in m.columns
        m2 = assemble_matrix(fvs, {"A": 1.0}, "structured", 2, 5)
        assert "subrating_cleanliness" not in m2.columns
