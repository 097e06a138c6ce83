from datetime import date

import pytest

from gentnow.corpus import (
    CorpusConfig, DuplicateNeighborhoodError, Review, SchemaError,
    detect_language, filter_language, filter_neighborhoods, ingest_listings,
    ingest_reviews, ingest_socio,
)


@pytest.fixture
def config():
    return CorpusConfig(window_start=date(2013, 1, 1), window_end=date(2017, 12, 31))


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


LISTING_HEADER = "listing_id,neighborhood_id,price,bedrooms,star_rating,location_star_rating\n"


class TestIngestListings:
    def test_well_formed_rows(self, tmp_path, config):
        path = write(tmp_path, "l.csv", LISTING_HEADER
                     + "L1,N1,80,1,4.5,9.0\nL2,N1,100,2,,\n")
        listings, report = ingest_listings(path, config)
        assert len(listings) == 2 and not report.errors
        assert listings[1].star_rating is None
        assert report.reconciles()

    def test_negative_price_is_row_error(self, tmp_path, config):
        path = write(tmp_path, "l.csv", LISTING_HEADER + "L1,N1,-5,1,4.5,9.0\n")
        listings, report = ingest_listings(path, config)
        assert listings == [] and len(report.errors) == 1
        assert "price" in report.errors[0].message
        assert report.errors[0].line == 2

    def test_currency_conversion(self, tmp_path):
        config = CorpusConfig(currency_rate=1.30)
        path = write(tmp_path, "l.csv", LISTING_HEADER + "L1,N1,50,1,4.5,9.0\n")
        listings, _ = ingest_listings(path, config)
        assert listings[0].price == pytest.approx(65.0)

    def test_currency_linearity(self, tmp_path):
        path = write(tmp_path, "l.csv", LISTING_HEADER + "L1,N1,50,1,,\nL2,N2,80,1,,\n")
        base, _ = ingest_listings(path, CorpusConfig(currency_rate=1.0))
        scaled, _ = ingest_listings(path, CorpusConfig(currency_rate=2.5))
        for a, b in zip(base, scaled):
            assert b.price == pytest.approx(2.5 * a.price)

    def test_missing_column_names_it(self, tmp_path, config):
        path = write(tmp_path, "l.csv", "listing_id,price,bedrooms\nL1,80,1\n")
        with pytest.raises(SchemaError, match="neighborhood_id"):
            ingest_listings(path, config)

    def test_unparseable_numeric_reports_line(self, tmp_path, config):
        path = write(tmp_path, "l.csv", LISTING_HEADER
                     + "L1,N1,80,1,4.5,9.0\nL2,N1,abc,1,4.5,9.0\n")
        listings, report = ingest_listings(path, config)
        assert len(listings) == 1
        assert report.errors[0].line == 3 and "price" in report.errors[0].message

    def test_star_rating_range_enforced(self, tmp_path, config):
        path = write(tmp_path, "l.csv", LISTING_HEADER + "L1,N1,80,1,6.0,9.0\n")
        _, report = ingest_listings(path, config)
        assert len(report.errors) == 1

    def test_subrating_columns_collected(self, tmp_path, config):
        path = write(tmp_path, "l.csv",
                     "listing_id,neighborhood_id,price,bedrooms,star_rating,"
                     "location_star_rating,cleanliness\nL1,N1,80,1,4.5,9.0,9.4\n")
        listings, _ = ingest_listings(path, config)
        assert dict(listings[0].subratings) == {"cleanliness": 9.4}

    def test_lossless_or_reported(self, tmp_path, config):
        rows = ["L1,N1,80,1,4.5,9.0", "L2,N1,-1,1,,", "L3,N2,90,oops,,", "L4,N2,70,2,,"]
        path = write(tmp_path, "l.csv", LISTING_HEADER + "\n".join(rows) + "\n")
        listings, report = ingest_listings(path, config)
        assert report.n_rows == 4
        assert report.n_parsed == len(listings) == 2
        assert len(report.errors) == 2
        assert report.reconciles()


REVIEW_HEADER = "review_id,listing_id,date,language,text\n"


class TestIngestReviews:
    def test_window_filtering(self, tmp_path, config):
        path = write(tmp_path, "r.csv", REVIEW_HEADER
                     + 'R1,L1,2012-05-01,en,"too early"\n'
                     + 'R2,L1,2014-06-01,en,"ok"\n'
                     + 'R3,L1,2015-06-01,en,"ok"\n'
                     + 'R4,L1,2016-06-01,en,"ok"\n')
        reviews, report = ingest_reviews(path, config)
        assert len(reviews) == 3
        assert report.excluded == {"out_of_window": 1}
        assert report.reconciles()

    def test_empty_text_retained(self, tmp_path, config):
        path = write(tmp_path, "r.csv", REVIEW_HEADER + 'R1,L1,2014-06-01,en,""\n')
        reviews, report = ingest_reviews(path, config)
        assert len(reviews) == 1 and reviews[0].text == ""

    def test_bad_date_reported(self, tmp_path, config):
        path = write(tmp_path, "r.csv", REVIEW_HEADER + 'R1,L1,notadate,en,"x"\n')
        reviews, report = ingest_reviews(path, config)
        assert reviews == [] and len(report.errors) == 1

    def test_quoted_multiline_text(self, tmp_path, config):
        path = write(tmp_path, "r.csv", REVIEW_HEADER
                     + 'R1,L1,2014-06-01,en,"line one\nline two"\n')
        reviews, _ = ingest_reviews(path, config)
        assert reviews[0].text == "line one\nline two"

    def test_window_boundaries_inclusive(self, tmp_path, config):
        path = write(tmp_path, "r.csv", REVIEW_HEADER
                     + 'R1,L1,2013-01-01,en,"first day"\n'
                     + 'R2,L1,2017-12-31,en,"last day"\n')
        reviews, _ = ingest_reviews(path, config)
        assert len(reviews) == 2


SOCIO_HEADER = "neighborhood_id,window,age,education,housing,income\n"


class TestIngestSocio:
    def test_usable_window(self, tmp_path):
        path = write(tmp_path, "s.csv", SOCIO_HEADER
                     + "11211,tw,1.0,2.0,3.0,4.0\n11212,tw,2.0,3.0,4.0,5.0\n")
        rows, report = ingest_socio(path, "tw")
        assert len(rows) == 2 and report.reconciles()

    def test_other_window_rows_counted_out(self, tmp_path):
        path = write(tmp_path, "s.csv", SOCIO_HEADER
                     + "11211,tw,1.0,2.0,3.0,4.0\n11211,tw_minus_1,1.0,2.0,3.0,4.0\n")
        rows, report = ingest_socio(path, "tw")
        assert len(rows) == 1 and report.excluded == {"other_window": 1}

    def test_duplicate_neighborhood_is_hard_error(self, tmp_path):
        path = write(tmp_path, "s.csv", SOCIO_HEADER
                     + "11211,tw,1.0,2.0,3.0,4.0\n11211,tw,9.0,9.0,9.0,9.0\n")
        with pytest.raises(DuplicateNeighborhoodError, match="11211"):
            ingest_socio(path, "tw")

    def test_missing_measure_reported(self, tmp_path):
        path = write(tmp_path, "s.csv", SOCIO_HEADER + "11211,tw,1.0,,3.0,4.0\n")
        rows, report = ingest_socio(path, "tw")
        assert rows == [] and "education" in report.errors[0].message

    def test_race_column_optional(self, tmp_path):
        path = write(tmp_path, "s.csv",
                     "neighborhood_id,window,age,education,housing,income,race\n"
                     "11211,tw,1.0,2.0,3.0,4.0,0.3\n11212,tw,1.0,2.0,3.0,4.0,\n")
        rows, _ = ingest_socio(path, "tw")
        assert rows[0].race == pytest.approx(0.3) and rows[1].race is None


def _review(text, language=None):
    return Review("R", "L", text, date(2014, 1, 1), language)


class TestLanguageFilter:
    def test_english_retained(self, config):
        kept, _ = filter_language([_review("Great place near the subway")], config)
        assert len(kept) == 1

    def test_french_excluded(self, config):
        kept, excluded = filter_language(
            [_review("Appartement magnifique près du métro")], config
        )
        assert kept == [] and excluded == {"detected_other": 1}

    def test_empty_text_undetectable(self, config):
        kept, excluded = filter_language([_review("")], config)
        assert kept == [] and excluded == {"undetectable": 1}

    def test_declared_tag_wins(self, config):
        kept, excluded = filter_language(
            [_review("whatever text", language="en-US"),
             _review("still whatever", language="fr")], config,
        )
        assert len(kept) == 1 and excluded == {"declared_other": 1}

    def test_detect_language_examples(self):
        assert detect_language("the flat was in a great area") == "en"
        assert detect_language("la casa es muy bonita y el barrio") == "es"
        assert detect_language("") is None


class TestNeighborhoodFilter:
    def _listings(self, tmp_path, config, counts):
        rows = []
        i = 0
        for nb, k in counts.items():
            for _ in range(k):
                i += 1
                rows.append(f"L{i},{nb},80,1,,")
        path = write(tmp_path, "l.csv", LISTING_HEADER + "\n".join(rows) + "\n")
        listings, _ = ingest_listings(path, config)
        return listings

    def test_strict_threshold(self, tmp_path, config):
        listings = self._listings(tmp_path, config, {"N4": 4, "N5": 5})
        active, counts = filter_neighborhoods(listings, [], config)
        assert active == {"N5"}
        assert counts["N4"]["listings"] == 4

    def test_idempotent(self, tmp_path, config):
        listings = self._listings(tmp_path, config, {"A": 7, "B": 3, "C": 12})
        active1, _ = filter_neighborhoods(listings, [], config)
        filtered = [l for l in listings if l.neighborhood_id in active1]
        active2, _ = filter_neighborhoods(filtered, [], config)
        assert active1 == active2

    def test_review_counts_joined_via_listings(self, tmp_path, config):
        listings = self._listings(tmp_path, config, {"A": 5})
        reviews = [Review("R1", listings[0].listing_id, "x", date(2014, 1, 1), "en"),
                   Review("R2", listings[1].listing_id, "y", date(2014, 1, 1), "en"),
                   Review("R3", "UNKNOWN", "z", date(2014, 1, 1), "en")]
        _, counts = filter_neighborhoods(listings, reviews, config)
        assert counts["A"]["reviews"] == 2


class TestCorpusConfig:
    def test_bad_window_rejected(self):
        with pytest.raises(SchemaError):
            CorpusConfig(window_start=date(2018, 1, 1), window_end=date(2013, 1, 1))

    def test_negative_min_listings_rejected(self):
        with pytest.raises(SchemaError):
            CorpusConfig(min_listings=-1)
