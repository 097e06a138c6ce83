"""Ingest listings, reviews, and socioeconomic panels into the data model.

All files are UTF-8 delimited text with a header row; review text may be
quoted and span lines. Ingestion never aborts on a malformed row: every input
row is either parsed, or recorded in the report with its line number, or
counted under an exclusion reason, so row counts always reconcile.

Prices are normalized to a common currency with the config's constant
conversion rate. Language filtering keeps the declared tag when present and
otherwise falls back to a stopword-profile heuristic (share of tokens found
in small per-language function-word lists; highest share wins, ties and
zero-hit texts are excluded as undetectable).
"""

import csv
import re
from dataclasses import dataclass, field
from datetime import date

from gentnow.errors import IngestError


class SchemaError(IngestError):
    pass


class DuplicateNeighborhoodError(IngestError):
    pass


@dataclass(frozen=True)
class Listing:
    listing_id: str
    neighborhood_id: str
    price: float
    bedrooms: float
    star_rating: float = None
    location_star_rating: float = None
    subratings: tuple = ()  # ((name, value), ...)


@dataclass(frozen=True)
class Review:
    review_id: str
    listing_id: str
    text: str
    date: date
    language: str = None


@dataclass(frozen=True)
class SocioPanelRow:
    neighborhood_id: str
    window: str
    age: float
    education: float
    housing: float
    income: float
    race: float = None


@dataclass(frozen=True)
class CorpusConfig:
    window_start: date = date(2013, 1, 1)
    window_end: date = date(2017, 12, 31)
    min_listings: int = 5
    language: str = "en"
    currency_rate: float = 1.0

    def __post_init__(self):
        if self.window_start >= self.window_end:
            raise SchemaError("window_start must precede window_end")
        if self.min_listings < 0:
            raise SchemaError("min_listings must be >= 0")
        if self.currency_rate <= 0:
            raise SchemaError("currency_rate must be positive")


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class IngestReport:
    path: str
    n_rows: int = 0
    n_parsed: int = 0
    errors: list = field(default_factory=list)
    excluded: dict = field(default_factory=dict)  # reason -> count

    def exclude(self, reason):
        self.excluded[reason] = self.excluded.get(reason, 0) + 1

    @property
    def n_excluded(self):
        return sum(self.excluded.values())

    def reconciles(self):
        return self.n_rows == self.n_parsed + len(self.errors) + self.n_excluded


LISTING_COLUMNS = ("listing_id", "neighborhood_id", "price", "bedrooms",
                   "star_rating", "location_star_rating")
REVIEW_COLUMNS = ("review_id", "listing_id", "date", "text")
SOCIO_COLUMNS = ("neighborhood_id", "window", "age", "education", "housing", "income")


def _check_header(reader, required, path):
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")


def _parse_float(raw, name):
    raw = (raw or "").strip()
    if raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"unparseable {name} {raw!r}") from None


def ingest_listings(path, config):
    """Parse a listings file; malformed rows land in the report, not exceptions."""
    listings = []
    report = IngestReport(path=str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, LISTING_COLUMNS, path)
        extra = [c for c in (reader.fieldnames or []) if c not in LISTING_COLUMNS]
        for row in reader:
            report.n_rows += 1
            line = reader.line_num
            try:
                price = _parse_float(row["price"], "price")
                bedrooms = _parse_float(row["bedrooms"], "bedrooms")
                if price is None or bedrooms is None:
                    raise ValueError("price and bedrooms are required")
                if price < 0:
                    raise ValueError(f"negative price {price}")
                if bedrooms < 0:
                    raise ValueError(f"negative bedrooms {bedrooms}")
                star = _parse_float(row.get("star_rating"), "star_rating")
                if star is not None and not 1.0 <= star <= 5.0:
                    raise ValueError(f"star_rating {star} outside [1, 5]")
                loc_star = _parse_float(row.get("location_star_rating"), "location_star_rating")
                if loc_star is not None and not 1.0 <= loc_star <= 10.0:
                    raise ValueError(f"location_star_rating {loc_star} outside [1, 10]")
                subratings = []
                for col in extra:
                    v = _parse_float(row.get(col), col)
                    if v is not None:
                        subratings.append((col, v))
                listings.append(Listing(
                    listing_id=row["listing_id"].strip(),
                    neighborhood_id=row["neighborhood_id"].strip(),
                    price=price * config.currency_rate,
                    bedrooms=bedrooms,
                    star_rating=star,
                    location_star_rating=loc_star,
                    subratings=tuple(subratings),
                ))
                report.n_parsed += 1
            except ValueError as exc:
                report.errors.append(RowError(line=line, message=str(exc)))
    return listings, report


def ingest_reviews(path, config):
    """Parse a reviews file; rows outside the analysis window are counted out."""
    reviews = []
    report = IngestReport(path=str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, REVIEW_COLUMNS, path)
        for row in reader:
            report.n_rows += 1
            line = reader.line_num
            try:
                when = date.fromisoformat((row["date"] or "").strip())
            except ValueError:
                report.errors.append(RowError(line=line, message=f"bad date {row['date']!r}"))
                continue
            if not config.window_start <= when <= config.window_end:
                report.exclude("out_of_window")
                continue
            language = (row.get("language") or "").strip() or None
            reviews.append(Review(
                review_id=row["review_id"].strip(),
                listing_id=row["listing_id"].strip(),
                text=row["text"] or "",
                date=when,
                language=language,
            ))
            report.n_parsed += 1
    return reviews, report


def ingest_socio(path, window):
    """Parse one temporal window of a socioeconomic panel.

    Rows for other windows are counted out; a duplicate neighborhood within
    the window is a hard error because scoring could not tell which row to
    believe. Rows with a missing core measure are reported and dropped.
    """
    rows = []
    seen = set()
    report = IngestReport(path=str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, SOCIO_COLUMNS, path)
        has_race = "race" in (reader.fieldnames or [])
        for row in reader:
            report.n_rows += 1
            line = reader.line_num
            if (row["window"] or "").strip() != window:
                report.exclude("other_window")
                continue
            nb = row["neighborhood_id"].strip()
            if nb in seen:
                raise DuplicateNeighborhoodError(
                    f"{path}:{line}: duplicate neighborhood {nb!r} in window {window!r}"
                )
            try:
                measures = {
                    m: _parse_float(row[m], m)
                    for m in ("age", "education", "housing", "income")
                }
                if any(v is None for v in measures.values()):
                    missing = [m for m, v in measures.items() if v is None]
                    raise ValueError(f"missing measure(s) {missing}")
                race = _parse_float(row.get("race"), "race") if has_race else None
            except ValueError as exc:
                report.errors.append(RowError(line=line, message=str(exc)))
                continue
            seen.add(nb)
            rows.append(SocioPanelRow(neighborhood_id=nb, window=window, race=race, **measures))
            report.n_parsed += 1
    return rows, report


# ---------------------------------------------------------------------------
# language filtering

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# small function-word profiles; whichever language owns the largest share of
# a review's tokens wins, ties are undetectable
LANGUAGE_PROFILES = {
    "en": frozenset("""the a an and is was were are to of in for with on at it
        this that we i you they he she my our your had has have not but so
        there here from very just be been would could near""".split()),
    "fr": frozenset("""le la les un une des du de et est dans pour avec sur au
        aux ce cette qui que ne pas très près être nous vous il elle mais
        chez était sont tout bien plus comme aussi sans merci""".split()),
    "es": frozenset("""el la los las un una es en y de para con por muy pero
        este esta que no se lo al del nos como todo bien más casa fue son
        estaba gracias""".split()),
    "de": frozenset("""der die das ein eine und ist war zu von mit für auf
        nicht wir ich sie es im am sehr auch aus bei nach dem den als wohnung
        gut danke""".split()),
    "it": frozenset("""il la lo le un una e è di in per con su non che si al
        del molto ma come anche della nella casa bene grazie sono era tutto
        più""".split()),
    "pt": frozenset("""o a os as um uma é em e de para com por muito mas não
        que se ao do da nos como tudo bem casa foi são estava obrigado
        mais""".split()),
}


def detect_language(text):
    """Best-guess language tag, or None when undetectable (empty text, ties)."""
    tokens = _WORD_RE.findall(text.lower())
    if not tokens:
        return None
    best_lang, best_frac = None, 0.0
    tie = False
    for lang, profile in LANGUAGE_PROFILES.items():
        frac = sum(1 for t in tokens if t in profile) / len(tokens)
        if frac > best_frac:
            best_lang, best_frac, tie = lang, frac, False
        elif frac == best_frac and frac > 0.0:
            tie = True
    if best_frac == 0.0 or tie:
        return None
    return best_lang


def filter_language(reviews, config):
    """Keep reviews in the configured language; returns (kept, exclusions)."""
    kept = []
    excluded = {}

    def count(reason):
        excluded[reason] = excluded.get(reason, 0) + 1

    want = config.language.lower()
    for review in reviews:
        if review.language:
            if review.language.lower().split("-")[0] == want:
                kept.append(review)
            else:
                count("declared_other")
            continue
        detected = detect_language(review.text)
        if detected is None:
            count("undetectable")
        elif detected == want:
            kept.append(review)
        else:
            count("detected_other")
    return kept, excluded


def filter_neighborhoods(listings, reviews, config):
    """Drop neighborhoods with fewer than ``min_listings`` listings.

    Returns (active neighborhood ids, per-neighborhood listing/review counts).
    The threshold is strict: a neighborhood with exactly ``min_listings``
    listings stays.
    """
    listing_counts = {}
    nb_of_listing = {}
    for listing in listings:
        listing_counts[listing.neighborhood_id] = listing_counts.get(listing.neighborhood_id, 0) + 1
        nb_of_listing[listing.listing_id] = listing.neighborhood_id
    review_counts = {}
    for review in reviews:
        nb = nb_of_listing.get(review.listing_id)
        if nb is not None:
            review_counts[nb] = review_counts.get(nb, 0) + 1
    counts = {
        nb: {"listings": c, "reviews": review_counts.get(nb, 0)}
        for nb, c in listing_counts.items()
    }
    active = {nb for nb, c in listing_counts.items() if c >= config.min_listings}
    return active, counts
