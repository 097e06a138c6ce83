"""Assemble the per-neighborhood feature vector from listings, reviews, and models.

Structured features are listing aggregates (counts and per-listing means,
with missing subfields skipped and counted); unstructured features are
per-review quantities (length, location-word share, sentiment, topic
distribution, embedding) averaged over a neighborhood's filtered reviews.
Design matrices come out in a fixed, versioned column order, with missing
cells imputed by the city-wide column median and flagged.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from gentnow import sentiment, textprep, topics
from gentnow.embeddings import infer_vector
from gentnow.errors import ComputationError


class FeatureError(ComputationError):
    pass


STRUCTURED_COLUMNS = (
    "n_listings", "n_reviews", "price_mean", "bedrooms_mean",
    "star_rating_mean", "location_star_mean",
)
UNSTRUCTURED_SCALARS = (
    "review_length_mean", "location_words_pct", "sentiment_mean",
    "location_sentiment_mean",
)
SELECTORS = ("structured", "unstructured", "all")


@dataclass
class FeatureVector:
    neighborhood_id: str
    n_listings: int = 0
    n_reviews: int = 0
    price_mean: float = None
    bedrooms_mean: float = None
    star_rating_mean: float = None
    location_star_mean: float = None
    review_length_mean: float = None
    location_words_pct: float = None
    sentiment_mean: float = None
    location_sentiment_mean: float = None
    topic_means: np.ndarray = None
    embedding_means: np.ndarray = None
    subrating_means: dict = field(default_factory=dict)
    missing_counts: dict = field(default_factory=dict)


def _mean_or_none(values):
    return float(np.mean(values)) if values else None


def structured_features(listings, reviews, neighborhood_id):
    """Listing aggregates for one neighborhood; missing subfields are counted."""
    mine = [l for l in listings if l.neighborhood_id == neighborhood_id]
    ids = {l.listing_id for l in mine}
    n_reviews = sum(1 for r in reviews if r.listing_id in ids)
    fv = FeatureVector(neighborhood_id=neighborhood_id,
                       n_listings=len(mine), n_reviews=n_reviews)
    fv.price_mean = _mean_or_none([l.price for l in mine])
    fv.bedrooms_mean = _mean_or_none([l.bedrooms for l in mine])
    stars = [l.star_rating for l in mine if l.star_rating is not None]
    fv.star_rating_mean = _mean_or_none(stars)
    fv.missing_counts["star_rating"] = len(mine) - len(stars)
    loc_stars = [l.location_star_rating for l in mine if l.location_star_rating is not None]
    fv.location_star_mean = _mean_or_none(loc_stars)
    fv.missing_counts["location_star_rating"] = len(mine) - len(loc_stars)
    sub_vals = {}
    for listing in mine:
        for name, value in listing.subratings:
            sub_vals.setdefault(name, []).append(value)
    fv.subrating_means = {name: float(np.mean(v)) for name, v in sub_vals.items()}
    return fv


def review_record(text, dictionary, lexicon, topic_model, embedding_model):
    """Per-review quantities every unstructured feature aggregates from."""
    tok = textprep.preprocess(text)
    return {
        "length": tok.raw_word_count,
        "location_pct": textprep.location_word_fraction(tok, dictionary),
        "is_location": textprep.is_location_review(tok, dictionary),
        "sentiment": sentiment.score_sentiment(text, lexicon),
        "theta": topics.infer_topics(topic_model, tok.tokens),
        "vector": infer_vector(embedding_model, tok.tokens),
        "location_tokens": tuple(t for t in tok.tokens if t in dictionary),
    }


def aggregate_records(records):
    """Neighborhood means of per-review records; {} when there are none."""
    if not records:
        return {}
    loc_sents = [r["sentiment"] for r in records if r["is_location"]]
    return {
        "review_length_mean": float(np.mean([r["length"] for r in records])),
        "location_words_pct": float(np.mean([r["location_pct"] for r in records])),
        "sentiment_mean": float(np.mean([r["sentiment"] for r in records])),
        "location_sentiment_mean": _mean_or_none(loc_sents),
        "topic_means": np.mean([r["theta"] for r in records], axis=0),
        "embedding_means": np.mean([r["vector"] for r in records], axis=0),
    }


def unstructured_features(review_texts, dictionary, lexicon, topic_model,
                          embedding_model):
    """Per-review text quantities averaged over one neighborhood's reviews.

    Returns a dict of the scalar features plus ``topic_means`` and
    ``embedding_means``; everything is None/absent when there are no reviews.
    """
    return aggregate_records([
        review_record(t, dictionary, lexicon, topic_model, embedding_model)
        for t in review_texts
    ])


def build_feature_vectors(listings, reviews, active_ids, dictionary, lexicon,
                          topic_model, embedding_model):
    """Full feature vector per active neighborhood, keyed by id."""
    nb_of_listing = {l.listing_id: l.neighborhood_id for l in listings}
    texts_by_nb = {}
    for review in reviews:
        nb = nb_of_listing.get(review.listing_id)
        if nb in active_ids:
            texts_by_nb.setdefault(nb, []).append(review.text)

    vectors = {}
    for nb in sorted(active_ids):
        fv = structured_features(listings, reviews, nb)
        parts = unstructured_features(
            texts_by_nb.get(nb, []), dictionary, lexicon, topic_model, embedding_model
        )
        for name, value in parts.items():
            setattr(fv, name, value)
        vectors[nb] = fv
    return vectors


@dataclass
class FeatureMatrix:
    neighborhood_ids: list
    columns: list
    X: np.ndarray
    y: np.ndarray
    selector: str
    imputed: list = field(default_factory=list)  # (neighborhood_id, column)


def feature_columns(selector, n_topics, dim, subrating_names=()):
    if selector == "structured":
        return list(STRUCTURED_COLUMNS) + [f"subrating_{s}" for s in subrating_names]
    if selector == "unstructured":
        return (list(UNSTRUCTURED_SCALARS)
                + [f"topic_{i}" for i in range(n_topics)]
                + [f"embedding_{i}" for i in range(dim)])
    if selector == "all":
        return (feature_columns("structured", n_topics, dim, subrating_names)
                + feature_columns("unstructured", n_topics, dim))
    raise FeatureError(f"unknown selector {selector!r}")


def _cell(fv, column):
    if column.startswith("topic_"):
        if fv.topic_means is None:
            return None
        return float(fv.topic_means[int(column.split("_")[1])])
    if column.startswith("embedding_"):
        if fv.embedding_means is None:
            return None
        return float(fv.embedding_means[int(column.split("_")[1])])
    if column.startswith("subrating_"):
        return fv.subrating_means.get(column[len("subrating_"):])
    return getattr(fv, column)


def assemble_matrix(feature_vectors, targets, selector, n_topics, dim,
                    include_subratings=False):
    """Design matrix + aligned target for one selector.

    Neighborhoods with a target but no feature vector are dropped with a
    warning; missing cells are imputed with the column median over observed
    values and recorded in ``imputed``.
    """
    ids = sorted(set(feature_vectors) & set(targets))
    orphans = sorted(set(targets) - set(feature_vectors))
    if orphans:
        warnings.warn(
            f"{len(orphans)} neighborhood(s) with a target but no features "
            f"were excluded (e.g. {orphans[0]!r})",
            stacklevel=2,
        )
    if not ids:
        raise FeatureError("no neighborhood has both features and a target")

    subrating_names = ()
    if include_subratings:
        names = set()
        for fv in feature_vectors.values():
            names.update(fv.subrating_means)
        subrating_names = tuple(sorted(names))
    columns = feature_columns(selector, n_topics, dim, subrating_names)

    raw = [[_cell(feature_vectors[nb], col) for col in columns] for nb in ids]
    X = np.empty((len(ids), len(columns)))
    imputed = []
    for j, col in enumerate(columns):
        observed = [row[j] for row in raw if row[j] is not None]
        median = float(np.median(observed)) if observed else 0.0
        for i, row in enumerate(raw):
            if row[j] is None:
                X[i, j] = median
                imputed.append((ids[i], col))
            else:
                X[i, j] = row[j]
    y = np.array([float(targets[nb]) for nb in ids])
    return FeatureMatrix(neighborhood_ids=ids, columns=columns, X=X, y=y,
                         selector=selector, imputed=imputed)
