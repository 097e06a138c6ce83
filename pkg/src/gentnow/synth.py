"""Synthetic-city generator with a planted gentrification signal.

The generator draws a latent score per neighborhood and leaks it into every
layer the pipeline can see: the late-window socioeconomic measures shift with
it (so the computed score tracks the latent one), listing counts and prices
rise with it, and review text mixes in location vocabulary and positive
sentiment words at rates that climb with it. Disadvantaged neighborhoods
(bottom half of the early-window index) receive the full latent effect;
the rest are damped, so they show significantly less change.

Output files use exactly the corpus module's schemas plus ground_truth.csv
(neighborhood_id, latent_score). Everything is drawn from one seeded
Generator in a fixed order, so a seed maps to byte-identical files.
"""

from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from gentnow.errors import ConfigError
from gentnow.scoring import percentile_rank

LOCATION_VOCAB = (
    "walk", "subway", "park", "restaurant", "location", "area",
    "neighborhood", "station", "street", "shop", "cafe", "downtown",
)
LISTING_VOCAB = (
    "room", "bed", "kitchen", "bathroom", "apartment", "space",
    "towel", "shower", "bedroom", "checkin", "wifi", "building",
)
POSITIVE_VOCAB = ("great", "love", "perfect", "wonderful", "amazing", "clean", "comfortable")
NEGATIVE_VOCAB = ("bad", "dirty", "noisy", "terrible", "awful", "broken")
FILLERS = ("the", "was", "and", "a", "to", "we", "it", "very")
FRENCH_POOL = (
    "appartement très agréable près du métro et des restaurants",
    "le quartier est magnifique nous avons adoré la maison",
    "très bien situé pour visiter la ville avec une belle vue",
)


@dataclass(frozen=True)
class SynthConfig:
    n_neighborhoods: int = 200
    seed: int = 0
    score_mean: float = 0.0
    score_sd: float = 12.0
    nondisadvantaged_damping: float = 0.35
    panel_signal: float = 1.0    # percentile points shifted per latent-score point
    panel_noise: float = 3.0     # percentile points of late-window measurement noise
    listings_base: float = 12.0
    listings_slope: float = 3.0
    listings_noise: float = 2.0
    reviews_base: float = 40.0
    reviews_slope: float = 8.0
    reviews_noise: float = 4.0
    location_rate_base: float = 0.30
    location_rate_slope: float = 0.11
    location_rate_noise: float = 0.02
    positive_rate_base: float = 0.80
    positive_rate_slope: float = 0.06
    price_base: float = 75.0
    price_slope: float = 6.0
    negation_rate: float = 0.05
    exclamation_rate: float = 0.3
    french_rate: float = 0.02
    out_of_window_rate: float = 0.01
    missing_star_rate: float = 0.03
    review_len_mean: float = 14.0
    window_start: date = date(2013, 1, 1)
    window_end: date = date(2017, 12, 31)

    def __post_init__(self):
        if self.n_neighborhoods < 8:
            raise ConfigError("need at least 8 neighborhoods")
        if self.score_sd <= 0:
            raise ConfigError("score_sd must be positive (degenerate config)")
        for name in ("listings_slope", "reviews_slope", "location_rate_slope",
                     "positive_rate_slope", "panel_signal"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


@dataclass
class SynthResult:
    paths: dict  # name -> Path
    neighborhood_ids: list
    latent_scores: np.ndarray
    disadvantaged: np.ndarray


def _fmt(x):
    return f"{x:.6f}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _quote(text):
    return '"' + text.replace('"', '""') + '"'


def _review_text(rng, cfg, p_loc, p_pos):
    length = max(4, int(rng.poisson(cfg.review_len_mean)))
    words = []
    for _ in range(length):
        u = rng.random()
        if u < 0.25:
            words.append(FILLERS[rng.integers(len(FILLERS))])
        elif rng.random() < p_loc:
            words.append(LOCATION_VOCAB[rng.integers(len(LOCATION_VOCAB))])
        else:
            words.append(LISTING_VOCAB[rng.integers(len(LISTING_VOCAB))])
    n_sent = 1 + int(rng.random() < 0.5)
    for _ in range(n_sent):
        if rng.random() < p_pos:
            w = POSITIVE_VOCAB[rng.integers(len(POSITIVE_VOCAB))]
        else:
            w = NEGATIVE_VOCAB[rng.integers(len(NEGATIVE_VOCAB))]
        if rng.random() < cfg.negation_rate:
            words.append("not")
        words.append(w)
    text = " ".join(words)
    text = text[0].upper() + text[1:]
    return text + ("!" if rng.random() < cfg.exclamation_rate else ".")


def generate_city(config, out_dir):
    """Write the five corpus files for one synthetic city; returns their paths."""
    cfg = config
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_neighborhoods
    width = len(str(n))
    ids = [f"N{i + 1:0{width}d}" for i in range(n)]

    # early-window measures are pure noise; disadvantage is independent of
    # the latent score, so selection does not bias the planted correlation
    eta = rng.normal(size=(n, 4))
    prev_pcts = np.column_stack([percentile_rank(eta[:, m]) for m in range(4)])
    prev_index = prev_pcts.mean(axis=1)
    disadvantaged = percentile_rank(prev_index) <= 50.0

    latent_raw = rng.normal(cfg.score_mean, cfg.score_sd, size=n)
    latent = np.where(disadvantaged, latent_raw, latent_raw * cfg.nondisadvantaged_damping)
    s_norm = latent / cfg.score_sd

    # late-window raw value = the measure's early percentile shifted by the
    # latent score plus noise; percentile-ranking it back recovers a score
    # that tracks the latent one (inverse-percentile construction)
    tw = (prev_pcts + cfg.panel_signal * latent[:, None]
          + cfg.panel_noise * rng.normal(size=(n, 4)))

    socio_rows = {"tw_minus_1": [], "tw": []}
    for i, nb in enumerate(ids):
        socio_rows["tw_minus_1"].append(
            [nb, "tw_minus_1"] + [_fmt(eta[i, m]) for m in range(4)]
        )
        socio_rows["tw"].append([nb, "tw"] + [_fmt(tw[i, m]) for m in range(4)])

    listing_rows = []
    listings_of = {}
    for i, nb in enumerate(ids):
        count = max(5, int(round(
            cfg.listings_base + cfg.listings_slope * s_norm[i]
            + cfg.listings_noise * rng.normal()
        )))
        listings_of[nb] = []
        for j in range(count):
            lid = f"L{nb}_{j + 1:03d}"
            listings_of[nb].append(lid)
            price = max(10.0, cfg.price_base + cfg.price_slope * s_norm[i]
                        + 8.0 * rng.normal())
            bedrooms = 1 + int(rng.random() < 0.25)
            star = "" if rng.random() < cfg.missing_star_rate else _fmt(
                float(np.clip(rng.normal(4.6, 0.12), 1.0, 5.0))
            )
            loc_star = "" if rng.random() < cfg.missing_star_rate else _fmt(
                float(np.clip(rng.normal(8.8 + 0.25 * s_norm[i], 0.3), 1.0, 10.0))
            )
            cleanliness = _fmt(float(np.clip(rng.normal(9.2, 0.4), 1.0, 10.0)))
            listing_rows.append([lid, nb, _fmt(price), str(bedrooms), star,
                                 loc_star, cleanliness])

    window_days = (cfg.window_end - cfg.window_start).days
    review_rows = []
    rid = 0
    for i, nb in enumerate(ids):
        n_rev = max(3, int(round(
            cfg.reviews_base + cfg.reviews_slope * s_norm[i]
            + cfg.reviews_noise * rng.normal()
        )))
        p_loc = float(np.clip(
            cfg.location_rate_base + cfg.location_rate_slope * s_norm[i]
            + cfg.location_rate_noise * rng.normal(), 0.02, 0.92,
        ))
        p_pos = float(np.clip(
            cfg.positive_rate_base + cfg.positive_rate_slope * s_norm[i], 0.05, 0.99,
        ))
        for _ in range(n_rev):
            rid += 1
            lid = listings_of[nb][rng.integers(len(listings_of[nb]))]
            if rng.random() < cfg.out_of_window_rate:
                when = cfg.window_start - timedelta(days=int(rng.integers(30, 400)))
            else:
                when = cfg.window_start + timedelta(days=int(rng.integers(0, window_days + 1)))
            if rng.random() < cfg.french_rate:
                text = FRENCH_POOL[rng.integers(len(FRENCH_POOL))]
                language = ""
            else:
                text = _review_text(rng, cfg, p_loc, p_pos)
                language = "en" if rng.random() < 0.5 else ""
            review_rows.append([f"R{rid:06d}", lid, when.isoformat(), language,
                                _quote(text)])

    paths = {
        "listings": out_dir / "listings.csv",
        "reviews": out_dir / "reviews.csv",
        "socio_prev": out_dir / "socio_tw_minus_1.csv",
        "socio_tw": out_dir / "socio_tw.csv",
        "ground_truth": out_dir / "ground_truth.csv",
    }
    _write_csv(paths["listings"],
               ["listing_id", "neighborhood_id", "price", "bedrooms",
                "star_rating", "location_star_rating", "cleanliness"],
               listing_rows)
    _write_csv(paths["reviews"],
               ["review_id", "listing_id", "date", "language", "text"],
               review_rows)
    header = ["neighborhood_id", "window", "age", "education", "housing", "income"]
    _write_csv(paths["socio_prev"], header, socio_rows["tw_minus_1"])
    _write_csv(paths["socio_tw"], header, socio_rows["tw"])
    _write_csv(paths["ground_truth"], ["neighborhood_id", "latent_score"],
               [[nb, _fmt(latent[i])] for i, nb in enumerate(ids)])

    return SynthResult(paths=paths, neighborhood_ids=ids,
                       latent_scores=latent, disadvantaged=disadvantaged)
