"""Pipeline driver: configuration, subcommands, and report/figure emission.

Config is a flat JSON file; every flag overrides its config key. Each command
writes its artifacts plus a manifest (config echo, seed, sha256 per artifact)
into the output directory, and reruns with the same config and seed are
byte-identical. Exit codes: 0 ok, 2 configuration, 3 ingestion, 4 computation.
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from datetime import date
from pathlib import Path

import numpy as np

from gentnow import corpus, embeddings, features, models, reporting, scoring, svgplot, synth, textprep, topics
from gentnow import sentiment as sentiment_mod
from gentnow.errors import ComputationError, ConfigError, IngestError
from gentnow.reporting import fmt
from gentnow.seeds import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_COMPUTE = 4

# namespaced keys for deriving stage seeds from the master seed
SEED_LDA, SEED_EMBED, SEED_EVAL = 1, 2, 3


@dataclass
class RunConfig:
    listings: str = None
    reviews: str = None
    socio_prev: str = None
    socio_tw: str = None
    dictionary: str = None  # None -> packaged default
    lexicon: str = None
    city: str = "city"
    target: str = "default"  # default | race | age | education | housing | income
    seed: int = None
    out_dir: str = None
    window_start: str = "2013-01-01"
    window_end: str = "2017-12-31"
    min_listings: int = 5
    language: str = "en"
    currency_rate: float = 1.0
    sentiment_alpha: float = 15.0
    include_subratings: bool = False
    feature_set: str = "all"
    lda_topics: object = 5  # int, or "auto" for perplexity-based selection
    lda_candidates: tuple = (2, 3, 4, 5, 6, 7, 8)
    lda_alpha: float = None
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    lda_burn_in: int = 200
    lda_min_count: int = 5
    embedding_dim: int = 25
    embedding_epochs: int = 20
    embedding_negative: int = 5
    embedding_min_count: int = 5
    embedding_parallel: bool = False
    rf_trees: int = 100
    n_simulations: int = 100
    test_fraction: float = 0.5
    synth: dict = None

    def corpus_config(self):
        try:
            return corpus.CorpusConfig(
                window_start=date.fromisoformat(self.window_start),
                window_end=date.fromisoformat(self.window_end),
                min_listings=self.min_listings,
                language=self.language,
                currency_rate=self.currency_rate,
            )
        except (ValueError, IngestError) as exc:
            raise ConfigError(str(exc)) from exc

    def target_spec(self):
        if self.target == "default":
            return scoring.TargetSpec()
        if self.target == "race":
            return scoring.TargetSpec.with_race()
        if self.target in scoring.ALL_MEASURES:
            return scoring.TargetSpec.single(self.target)
        raise ConfigError(f"unknown target {self.target!r}")

    def echo(self):
        d = asdict(self)
        return {k: v for k, v in sorted(d.items()) if v is not None}


def load_config(path=None, overrides=None):
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    cfg = RunConfig(**data)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg = replace(cfg, **{key: value})
    if cfg.seed is None:
        raise ConfigError("a seed is mandatory (set 'seed' in the config or pass --seed)")
    cfg = replace(cfg, seed=int(cfg.seed))
    return cfg


def _require_paths(cfg, names):
    for name in names:
        value = getattr(cfg, name)
        if value is None:
            raise ConfigError(f"config key {name!r} is required for this command")
        if not Path(value).exists():
            raise ConfigError(f"{name} path does not exist: {value}")


def _out_dir(cfg):
    if cfg.out_dir is None:
        raise ConfigError("an output directory is required (config 'out_dir' or --out)")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dictionary(cfg):
    if cfg.dictionary is None:
        return textprep.LocationDictionary.default()
    return textprep.LocationDictionary.from_file(cfg.dictionary)


def _lexicon(cfg):
    return sentiment_mod.load_lexicon(cfg.lexicon, alpha=cfg.sentiment_alpha)


# ---------------------------------------------------------------------------
# shared pipeline stages

def _score_table(cfg):
    _require_paths(cfg, ["socio_prev", "socio_tw"])
    rows_prev, rep_prev = corpus.ingest_socio(cfg.socio_prev, scoring.WINDOW_PREV)
    rows_tw, rep_tw = corpus.ingest_socio(cfg.socio_tw, scoring.WINDOW_TW)
    table = scoring.build_target(rows_prev + rows_tw, cfg.target_spec())
    return table, (rep_prev, rep_tw)


def _load_corpus(cfg):
    _require_paths(cfg, ["listings", "reviews"])
    ccfg = cfg.corpus_config()
    listings, l_rep = corpus.ingest_listings(cfg.listings, ccfg)
    reviews, r_rep = corpus.ingest_reviews(cfg.reviews, ccfg)
    kept, lang_excluded = corpus.filter_language(reviews, ccfg)
    active, counts = corpus.filter_neighborhoods(listings, kept, ccfg)
    return listings, kept, active, counts, (l_rep, r_rep, lang_excluded)


def _study_reviews(listings, reviews, study_ids):
    nb_of_listing = {l.listing_id: l.neighborhood_id for l in listings}
    out = []
    for review in reviews:
        nb = nb_of_listing.get(review.listing_id)
        if nb in study_ids:
            out.append((nb, review))
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(cfg, out):
    overrides = dict(cfg.synth or {})
    overrides["seed"] = cfg.seed
    try:
        scfg = synth.SynthConfig(**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad synth config: {exc}") from exc
    result = synth.generate_city(scfg, out)
    run_cfg = {
        "listings": str(result.paths["listings"]),
        "reviews": str(result.paths["reviews"]),
        "socio_prev": str(result.paths["socio_prev"]),
        "socio_tw": str(result.paths["socio_tw"]),
        "city": "synthetic",
        "seed": cfg.seed,
        "out_dir": str(out / "results"),
    }
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(run_cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    artifacts = list(result.paths.values()) + [cfg_path]
    reporting.write_manifest(out, "synth", cfg.echo(), cfg.seed, artifacts)
    print(f"synthetic city with {scfg.n_neighborhoods} neighborhoods written to {out}")
    return EXIT_OK


def cmd_ingest(cfg, out):
    listings, reviews, active, counts, (l_rep, r_rep, lang_excluded) = _load_corpus(cfg)
    lines = [f"ingest report for city {cfg.city!r}", ""]
    for rep in (l_rep, r_rep):
        lines.append(f"{rep.path}: rows={rep.n_rows} parsed={rep.n_parsed} "
                     f"errors={len(rep.errors)} excluded={rep.n_excluded} "
                     f"reconciles={rep.reconciles()}")
        for err in rep.errors:
            lines.append(f"  line {err.line}: {err.message}")
        for reason, count in sorted(rep.excluded.items()):
            lines.append(f"  excluded[{reason}] = {count}")
    lines.append("")
    for reason, count in sorted(lang_excluded.items()):
        lines.append(f"language filter excluded[{reason}] = {count}")
    lines.append(f"reviews kept: {len(reviews)}")
    lines.append(f"neighborhoods with listings: {len(counts)}; "
                 f"active (>= {cfg.min_listings} listings): {len(active)}")
    path = reporting.write_text(out / "ingest_report.txt", "\n".join(lines) + "\n")
    reporting.write_manifest(out, "ingest", cfg.echo(), cfg.seed, [path])
    print("\n".join(lines))
    return EXIT_OK


def cmd_score(cfg, out):
    table, _ = _score_table(cfg)
    spec = table.spec
    artifacts = []

    rows = [
        [nb, fmt(table.index_prev[i]), fmt(table.index_tw[i]), fmt(table.score[i]),
         "1" if table.disadvantaged[i] else "0"]
        for i, nb in enumerate(table.neighborhood_ids)
    ]
    artifacts.append(reporting.write_csv(
        out / "scores.csv",
        ["neighborhood_id", "index_prev", "index_tw", "score", "disadvantaged"],
        rows,
    ))

    comp_header = ["neighborhood_id"]
    for m in spec.measures:
        comp_header += [f"{m}_pct_prev", f"{m}_pct_tw", f"{m}_pct_delta"]
    comp_rows = []
    for i, nb in enumerate(table.neighborhood_ids):
        row = [nb]
        for m in spec.measures:
            prev = table.percentiles[(m, scoring.WINDOW_PREV)][i]
            now = table.percentiles[(m, scoring.WINDOW_TW)][i]
            row += [fmt(prev), fmt(now), fmt(now - prev)]
        comp_rows.append(row)
    artifacts.append(reporting.write_csv(out / "score_components.csv", comp_header, comp_rows))

    mask = table.disadvantaged
    summary = []
    for m in spec.measures:
        for window in (scoring.WINDOW_PREV, scoring.WINDOW_TW):
            vals = table.percentiles[(m, window)][mask]
            summary.append([m, window, fmt(np.median(vals)), fmt(np.std(vals, ddof=1))])
    summary.append(["index", scoring.WINDOW_PREV, fmt(np.median(table.index_prev[mask])),
                    fmt(np.std(table.index_prev[mask], ddof=1))])
    summary.append(["index", scoring.WINDOW_TW, fmt(np.median(table.index_tw[mask])),
                    fmt(np.std(table.index_tw[mask], ddof=1))])
    summary.append([spec.label, "delta", fmt(np.median(table.score[mask])),
                    fmt(np.std(table.score[mask], ddof=1))])
    summary.append(["disadvantaged_neighborhoods", "", str(int(mask.sum())), ""])
    summary.append(["unusable_neighborhoods", "", str(len(table.unusable)), ""])
    artifacts.append(reporting.write_csv(
        out / "score_summary.csv", ["measure", "window", "median", "sd"], summary,
    ))

    edges, hist_counts = reporting.histogram(table.score[mask])
    artifacts.append(reporting.write_csv(
        out / "score_histogram.csv", ["bin_left", "bin_right", "count"],
        [[fmt(edges[i]), fmt(edges[i + 1]), str(int(c))] for i, c in enumerate(hist_counts)],
    ))
    svg_path = out / "score_histogram.svg"
    svgplot.svg_histogram(svg_path, edges, hist_counts,
                          f"{cfg.city}: {spec.label} distribution (disadvantaged)",
                          xlabel=spec.label)
    artifacts.append(svg_path)

    reporting.write_manifest(out, "score", cfg.echo(), cfg.seed, artifacts)
    print(f"scored {len(table.neighborhood_ids)} neighborhoods "
          f"({int(mask.sum())} disadvantaged) -> {out}")
    return EXIT_OK


def _fit_or_load_models(cfg, out, in_dir, train_tokens):
    """Load persisted models matching this run's seed, else fit and persist.

    A persisted model fitted under a different seed (or topic count) is stale
    for this config and gets refitted, so manifests never lie about lineage.
    """
    artifacts = []
    selection = None
    topic_seed = derive_seed(cfg.seed, SEED_LDA)

    topic_model = None
    topic_dir = (in_dir / "topic_model") if in_dir else None
    if topic_dir and (topic_dir / "meta.json").exists():
        candidate = topics.load_model(topic_dir)
        if candidate.seed == topic_seed and (
            cfg.lda_topics == "auto" or candidate.n_topics == cfg.lda_topics
        ):
            topic_model = candidate
    if topic_model is None:
        k = cfg.lda_topics
        if k == "auto":
            k, selection = topics.select_k(
                train_tokens, cfg.lda_candidates, seed=derive_seed(cfg.seed, SEED_LDA, 99),
                iterations=cfg.lda_iterations, burn_in=cfg.lda_burn_in,
                alpha=cfg.lda_alpha, beta=cfg.lda_beta, min_count=cfg.lda_min_count,
            )
        topic_model = topics.fit_lda(
            train_tokens, int(k), alpha=cfg.lda_alpha, beta=cfg.lda_beta,
            iterations=cfg.lda_iterations, burn_in=cfg.lda_burn_in,
            seed=topic_seed, min_count=cfg.lda_min_count,
        )
        topics.save_model(topic_model, out / "topic_model")
        artifacts += sorted((out / "topic_model").iterdir())

    embed_seed = derive_seed(cfg.seed, SEED_EMBED)
    embedding_model = None
    emb_dir = (in_dir / "embedding_model") if in_dir else None
    if emb_dir and (emb_dir / "meta.json").exists():
        candidate = embeddings.load_model(emb_dir)
        if candidate.seed == embed_seed and candidate.dim == cfg.embedding_dim:
            embedding_model = candidate
    if embedding_model is None:
        embedding_model = embeddings.fit_embeddings(
            train_tokens, dim=cfg.embedding_dim, epochs=cfg.embedding_epochs,
            negative=cfg.embedding_negative, min_count=cfg.embedding_min_count,
            seed=embed_seed, parallel=cfg.embedding_parallel,
        )
        embeddings.save_model(embedding_model, out / "embedding_model")
        artifacts += sorted((out / "embedding_model").iterdir())
    return topic_model, embedding_model, selection, artifacts


def _prepare_study(cfg):
    table, _ = _score_table(cfg)
    listings, reviews, active, counts, _reports = _load_corpus(cfg)
    targets = {
        nb: table.score[i]
        for i, nb in enumerate(table.neighborhood_ids) if table.disadvantaged[i]
    }
    study_ids = sorted(set(targets) & active)
    if not study_ids:
        raise ComputationError("no disadvantaged neighborhood passes the listing filter")
    pairs = _study_reviews(listings, reviews, set(study_ids))
    return table, listings, pairs, study_ids, {nb: targets[nb] for nb in study_ids}


def cmd_fit(cfg, out, in_dir=None):
    _, _, pairs, _, _ = _prepare_study(cfg)
    train_tokens = [textprep.preprocess(r.text).tokens for _, r in pairs]
    _, _, selection, artifacts = _fit_or_load_models(cfg, out, in_dir, train_tokens)
    if selection:
        artifacts.append(reporting.write_csv(
            out / "lda_selection.csv", ["n_topics", "held_out_perplexity"],
            [[str(k), fmt(v)] for k, v in sorted(selection.items())],
        ))
    reporting.write_manifest(out, "fit", cfg.echo(), cfg.seed, artifacts)
    print(f"models fitted on {len(pairs)} reviews -> {out}")
    return EXIT_OK


def cmd_featurize(cfg, out, in_dir=None):
    table, listings, pairs, study_ids, targets = _prepare_study(cfg)
    dictionary = _dictionary(cfg)
    lexicon = _lexicon(cfg)
    train_tokens = [textprep.preprocess(r.text).tokens for _, r in pairs]
    topic_model, embedding_model, selection, artifacts = _fit_or_load_models(
        cfg, out, in_dir, train_tokens
    )
    if selection:
        artifacts.append(reporting.write_csv(
            out / "lda_selection.csv", ["n_topics", "held_out_perplexity"],
            [[str(k), fmt(v)] for k, v in sorted(selection.items())],
        ))
    k, dim = topic_model.n_topics, embedding_model.dim

    records_by_nb = {nb: [] for nb in study_ids}
    review_rows = []
    loc_counts = {}
    for nb, review in pairs:
        rec = features.review_record(review.text, dictionary, lexicon,
                                     topic_model, embedding_model)
        records_by_nb[nb].append(rec)
        review_rows.append(
            [review.review_id, nb, str(rec["length"]), fmt(rec["location_pct"]),
             "1" if rec["is_location"] else "0", fmt(rec["sentiment"])]
            + [fmt(x) for x in rec["theta"]]
        )
        for term in rec["location_tokens"]:
            loc_counts[(nb, term)] = loc_counts.get((nb, term), 0) + 1
    artifacts.append(reporting.write_csv(
        out / "review_features.csv",
        ["review_id", "neighborhood_id", "length", "location_pct", "is_location",
         "sentiment"] + [f"theta_{i}" for i in range(k)],
        review_rows,
    ))
    artifacts.append(reporting.write_csv(
        out / "location_word_counts.csv", ["neighborhood_id", "term", "count"],
        [[nb, term, str(c)] for (nb, term), c in sorted(loc_counts.items())],
    ))

    vectors = {}
    for nb in study_ids:
        fv = features.structured_features(listings, [r for _, r in pairs], nb)
        for name, value in features.aggregate_records(records_by_nb[nb]).items():
            setattr(fv, name, value)
        vectors[nb] = fv

    matrix = features.assemble_matrix(vectors, targets, "all", k, dim,
                                      include_subratings=cfg.include_subratings)
    artifacts.append(reporting.write_csv(
        out / "features.csv",
        ["neighborhood_id", "score"] + matrix.columns,
        [[nb, fmt(matrix.y[i])] + [fmt(x, nd=10) for x in matrix.X[i]]
         for i, nb in enumerate(matrix.neighborhood_ids)],
    ))
    artifacts.append(reporting.write_csv(
        out / "imputed.csv", ["neighborhood_id", "column"],
        [[nb, col] for nb, col in matrix.imputed],
    ))

    summary = []
    for j, col in enumerate(matrix.columns):
        vals = matrix.X[:, j]
        summary.append([col, fmt(np.median(vals)), fmt(np.std(vals, ddof=1))])
    topic_cols = [j for j, c in enumerate(matrix.columns) if c.startswith("topic_")]
    emb_cols = [j for j, c in enumerate(matrix.columns) if c.startswith("embedding_")]
    for label, cols in (("topics_altogether", topic_cols), ("embeddings_altogether", emb_cols)):
        pooled = matrix.X[:, cols].ravel()
        summary.append([label, fmt(np.median(pooled)), fmt(np.std(pooled, ddof=1))])
    summary.append(["study_neighborhoods", str(len(matrix.neighborhood_ids)), ""])
    artifacts.append(reporting.write_csv(
        out / "feature_summary.csv", ["feature", "median", "sd"], summary,
    ))
    artifacts.append(reporting.write_text(
        out / "data_dictionary.txt", _data_dictionary(matrix.columns, k, dim),
    ))

    reporting.write_manifest(out, "featurize", cfg.echo(), cfg.seed, artifacts)
    print(f"featurized {len(matrix.neighborhood_ids)} study neighborhoods "
          f"({len(pairs)} reviews, K={k}, D={dim}) -> {out}")
    return EXIT_OK


_COLUMN_DOCS = {
    "n_listings": "total listings in the neighborhood over the analysis window",
    "n_reviews": "total (filtered) reviews joined to the neighborhood's listings",
    "price_mean": "mean nightly price per listing, normalized currency",
    "bedrooms_mean": "mean bedroom count per listing",
    "star_rating_mean": "mean overall star rating per listing (1-5; missing skipped)",
    "location_star_mean": "mean location star rating per listing (1-10; missing skipped)",
    "review_length_mean": "mean raw word count per review",
    "location_words_pct": "mean percent of normalized tokens that are location words",
    "sentiment_mean": "mean rule-based sentiment per review, in (-1, 1)",
    "location_sentiment_mean": "mean sentiment over location reviews (>=10% location words)",
}


def _data_dictionary(columns, k, dim):
    lines = ["feature matrix column reference (column order is versioned; "
             "features.csv carries neighborhood_id, score, then these)", ""]
    for col in columns:
        if col.startswith("topic_"):
            doc = f"mean per-review probability of topic {col.split('_')[1]} of {k}"
        elif col.startswith("embedding_"):
            doc = f"mean per-review embedding coordinate {col.split('_')[1]} of {dim}"
        elif col.startswith("subrating_"):
            doc = f"mean {col[len('subrating_'):]} subrating per listing"
        else:
            doc = _COLUMN_DOCS[col]
        lines.append(f"{col:<26} {doc}")
    lines.append("")
    lines.append("missing cells are imputed with the column median over observed "
                 "values; imputed.csv lists every (neighborhood, column) cell")
    return "\n".join(lines) + "\n"


def _load_features(in_dir):
    path = in_dir / "features.csv"
    if not path.exists():
        raise ConfigError(f"{path} not found; run 'featurize' first")
    header, rows = reporting.read_csv(path)
    ids = [r[0] for r in rows]
    y = np.array([float(r[1]) for r in rows])
    columns = header[2:]
    X = np.array([[float(v) for v in r[2:]] for r in rows])
    return ids, columns, X, y


def cmd_evaluate(cfg, out, in_dir):
    ids, columns, X, y = _load_features(in_dir)
    n_topics = sum(1 for c in columns if c.startswith("topic_"))
    dim = sum(1 for c in columns if c.startswith("embedding_"))
    sub_names = tuple(c[len("subrating_"):] for c in columns if c.startswith("subrating_"))
    col_index = {c: j for j, c in enumerate(columns)}
    artifacts = []

    corr = {c: models.pearson_r(X[:, j], y) for c, j in col_index.items()}
    artifacts.append(reporting.write_csv(
        out / "correlations.csv", ["feature", "r", "p_value", "n", "stars"],
        [[c, fmt(corr[c].r, nd=4), fmt(corr[c].p_value, nd=6), str(corr[c].n), corr[c].stars]
         for c in columns],
    ))

    with_score = np.column_stack([X, y])
    R, P = models.correlation_matrix(with_score)
    names = columns + ["score"]
    artifacts.append(reporting.write_csv(
        out / "cross_corr_features.csv", ["feature"] + names,
        [[names[a]] + [fmt(R[a, b], nd=4) for b in range(len(names))]
         for a in range(len(names))],
    ))

    comp_path = in_dir / "score_components.csv"
    if comp_path.exists():
        header, rows = reporting.read_csv(comp_path)
        delta_cols = [j for j, c in enumerate(header) if c.endswith("_pct_delta")]
        by_id = {r[0]: [float(r[j]) for j in delta_cols] for r in rows}
        aligned = np.array([by_id[nb] for nb in ids if nb in by_id])
        kept_ids = [nb for nb in ids if nb in by_id]
        y_kept = np.array([y[ids.index(nb)] for nb in kept_ids])
        socio = np.column_stack([aligned, y_kept])
        socio_names = [header[j] for j in delta_cols] + ["score"]
        R_s, _ = models.correlation_matrix(socio)
        artifacts.append(reporting.write_csv(
            out / "cross_corr_socio.csv", ["measure"] + socio_names,
            [[socio_names[a]] + [fmt(R_s[a, b], nd=4) for b in range(len(socio_names))]
             for a in range(len(socio_names))],
        ))

    if cfg.feature_set == "all":
        selectors = ["structured", "unstructured", "all"]
    elif cfg.feature_set in features.SELECTORS:
        selectors = [cfg.feature_set]
    else:
        raise ConfigError(f"unknown feature set {cfg.feature_set!r}")
    matrices = {}
    for sel in selectors:
        cols = features.feature_columns(sel, n_topics, dim, sub_names)
        matrices[sel] = X[:, [col_index[c] for c in cols]]
    mdi_selector = "all" if "all" in matrices else selectors[-1]

    protocol = models.EvaluationProtocol(
        n_simulations=cfg.n_simulations, test_fraction=cfg.test_fraction,
        master_seed=derive_seed(cfg.seed, SEED_EVAL), rf_trees=cfg.rf_trees,
    )
    report = models.evaluate(
        matrices, y, protocol,
        feature_names=features.feature_columns(mdi_selector, n_topics, dim, sub_names),
        mdi_selector=mdi_selector,
    )

    rmse_rows = [["baseline", "none", fmt(report.baseline_in_sample), fmt(0.0), "in_sample"]]
    for sel in selectors:
        rmse_rows.append(["ols", sel, fmt(report.in_sample_rmse[sel]), fmt(0.0), "in_sample"])
    rmse_rows.append(["baseline", "none", fmt(report.baseline_oos_mean),
                      fmt(report.baseline_oos_sd), "out_of_sample"])
    for sel in selectors:
        rmse_rows.append(["random_forest", sel, fmt(report.oos_mean_rmse[sel]),
                          fmt(report.oos_sd_rmse[sel]), "out_of_sample"])
    artifacts.append(reporting.write_csv(
        out / "rmse.csv", ["model", "feature_set", "rmse_mean", "rmse_sd", "regime"],
        rmse_rows,
    ))
    labels = [f"{r[0][:8]}|{r[1][:6]}|{'in' if r[4] == 'in_sample' else 'out'}" for r in rmse_rows]
    svg_path = out / "rmse.svg"
    svgplot.svg_bars(svg_path, labels, [float(r[2]) for r in rmse_rows],
                     [float(r[3]) for r in rmse_rows],
                     f"{cfg.city}: RMSE by model and feature set")
    artifacts.append(svg_path)

    mdi_sorted = sorted(report.mdi.items(), key=lambda kv: (-kv[1], kv[0]))
    artifacts.append(reporting.write_csv(
        out / "mdi.csv", ["feature", "mdi_pct"],
        [[name, fmt(v, nd=4)] for name, v in mdi_sorted],
    ))
    artifacts.append(reporting.write_csv(
        out / "mdi_top5.csv", ["rank", "feature", "mdi_pct"],
        [[str(i + 1), name, fmt(v, nd=4)] for i, (name, v) in enumerate(mdi_sorted[:5])],
    ))

    artifacts += _quartile_outputs(out, in_dir, ids, y)
    artifacts += _component_scatter(cfg, out, columns, X, y, corr, ids)

    lines = [f"evaluation report for city {cfg.city!r} (n={report.n_rows}, "
             f"{protocol.n_simulations} simulations, seed={cfg.seed})", ""]
    lines.append("correlation with the score (top 12 by |r|):")
    top_corr = sorted(columns, key=lambda c: -abs(corr[c].r) if np.isfinite(corr[c].r) else 0)[:12]
    for c in top_corr:
        lines.append(f"  {c:<28} r={corr[c].r:+.3f} {corr[c].stars}")
    lines.append("")
    lines.append("RMSE (in-sample OLS / out-of-sample RF mean +- sd):")
    lines.append(f"  baseline        {report.baseline_in_sample:8.3f} / "
                 f"{report.baseline_oos_mean:8.3f} +- {report.baseline_oos_sd:.3f}")
    for sel in selectors:
        lines.append(f"  {sel:<15} {report.in_sample_rmse[sel]:8.3f} / "
                     f"{report.oos_mean_rmse[sel]:8.3f} +- {report.oos_sd_rmse[sel]:.3f}")
    lines.append("")
    lines.append("top-5 feature importance (MDI %):")
    for i, (name, v) in enumerate(mdi_sorted[:5]):
        lines.append(f"  {i + 1}. {name:<28} {v:6.2f}%")
    artifacts.append(reporting.write_text(out / "evaluation_report.txt",
                                          "\n".join(lines) + "\n"))

    reporting.write_manifest(out, "evaluate", cfg.echo(), cfg.seed, artifacts)
    print("\n".join(lines))
    return EXIT_OK


def _quartile_outputs(out, in_dir, ids, y):
    path = in_dir / "review_features.csv"
    if not path.exists():
        return []
    header, rows = reporting.read_csv(path)
    theta_cols = [j for j, c in enumerate(header) if c.startswith("theta_")]
    loc_pct_col = header.index("location_pct")
    scores = dict(zip(ids, y))
    artifacts = []

    by_nb_theta = {nb: [] for nb in ids}
    by_nb_locpct = {nb: [] for nb in ids}
    for r in rows:
        nb = r[1]
        if nb in by_nb_theta:
            by_nb_theta[nb].append([float(r[j]) for j in theta_cols])
            by_nb_locpct[nb].append(float(r[loc_pct_col]))

    topic_rows = []
    for t_i, j in enumerate(theta_cols):
        per_nb = {nb: [v[t_i] for v in vals] for nb, vals in by_nb_theta.items() if vals}
        qc = models.quartile_contrast(per_nb, scores)
        topic_rows.append([f"topic_{t_i}", fmt(qc.upper_mean), fmt(qc.lower_mean),
                           fmt(qc.t, nd=4), fmt(qc.p_value, nd=6)])
    artifacts.append(reporting.write_csv(
        out / "topic_quartiles.csv",
        ["topic", "upper_quartile_mean", "lower_quartile_mean", "t", "p_value"],
        topic_rows,
    ))

    qc = models.quartile_contrast({nb: v for nb, v in by_nb_locpct.items() if v}, scores)
    wc_path = in_dir / "location_word_counts.csv"
    word_rows = [["__all_location_words__", fmt(qc.upper_mean), fmt(qc.lower_mean),
                  fmt(qc.t, nd=4), fmt(qc.p_value, nd=6)]]
    if wc_path.exists():
        _, wrows = reporting.read_csv(wc_path)
        pcts = scoring.percentile_rank([scores[nb] for nb in ids])
        group = {nb: ("upper" if p >= 75 else "lower" if p <= 25 else "mid")
                 for nb, p in zip(ids, pcts)}
        n_reviews = {"upper": 0, "lower": 0}
        for nb, vals in by_nb_locpct.items():
            g = group.get(nb)
            if g in n_reviews:
                n_reviews[g] += len(vals)
        overall = {}
        by_group = {}
        for nb, term, count in wrows:
            overall[term] = overall.get(term, 0) + int(count)
            g = group.get(nb)
            if g in ("upper", "lower"):
                by_group[(term, g)] = by_group.get((term, g), 0) + int(count)
        top10 = sorted(overall, key=lambda t: (-overall[t], t))[:10]
        for term in top10:
            up = by_group.get((term, "upper"), 0) / max(n_reviews["upper"], 1)
            lo = by_group.get((term, "lower"), 0) / max(n_reviews["lower"], 1)
            word_rows.append([term, fmt(up), fmt(lo), "", ""])
    artifacts.append(reporting.write_csv(
        out / "location_words_quartiles.csv",
        ["term", "upper_per_review", "lower_per_review", "t", "p_value"],
        word_rows,
    ))
    return artifacts


def _component_scatter(cfg, out, columns, X, y, corr, ids):
    def top_by_r(prefix):
        cands = [c for c in columns if c.startswith(prefix) and np.isfinite(corr[c].r)]
        if not cands:
            return None
        return max(cands, key=lambda c: (abs(corr[c].r), c))

    t_col, e_col = top_by_r("topic_"), top_by_r("embedding_")
    if t_col is None or e_col is None:
        return []
    tj = columns.index(t_col)
    ej = columns.index(e_col)
    rows = [[ids[i], fmt(X[i, tj], nd=6), fmt(X[i, ej], nd=6), fmt(y[i])]
            for i in range(len(ids))]
    path = reporting.write_csv(
        out / "component_scatter.csv",
        ["neighborhood_id", t_col, e_col, "score"], rows,
    )
    pcts = scoring.percentile_rank(y) / 100.0
    svg_path = out / "component_scatter.svg"
    svgplot.svg_scatter(svg_path, X[:, tj].tolist(), X[:, ej].tolist(),
                        pcts.tolist(),
                        f"{cfg.city}: top components vs score", t_col, e_col)
    return [path, svg_path]


def cmd_report(cfg, out, in_dir=None):
    cmd_score(cfg, out)
    cmd_featurize(cfg, out, in_dir=in_dir or out)
    cmd_evaluate(cfg, out, in_dir=in_dir or out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser():
    parser = argparse.ArgumentParser(
        prog="gentnow",
        description="Nowcast neighborhood gentrification from short-term-rental data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "synth": "generate a synthetic city with a planted signal",
        "ingest": "validate input files and report row accounting",
        "score": "compute percentile indices and gentrification scores",
        "fit": "fit and persist the topic and embedding models",
        "featurize": "build the per-neighborhood feature matrix",
        "evaluate": "run the correlation and regression study",
        "report": "score + featurize + evaluate in one go",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--city", help="city label (overrides config)")
        p.add_argument("--target", help="default | race | age | education | housing | income")
        p.add_argument("--feature-set", dest="feature_set",
                       help="structured | unstructured | all")
        p.add_argument("--dictionary", help="location dictionary file")
        p.add_argument("--lexicon", help="sentiment lexicon file")
        if name in ("featurize", "evaluate", "fit", "report"):
            p.add_argument("--in", dest="in_dir",
                           help="directory with prior-stage artifacts (default: --out)")
        if name == "synth":
            p.add_argument("--neighborhoods", type=int, help="number of neighborhoods")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed, "out_dir": args.out, "city": args.city,
        "target": args.target, "feature_set": args.feature_set,
        "dictionary": args.dictionary, "lexicon": args.lexicon,
    }
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "synth" and args.neighborhoods is not None:
            cfg = replace(cfg, synth={**(cfg.synth or {}),
                                      "n_neighborhoods": args.neighborhoods})
        out = _out_dir(cfg)
        in_dir = Path(getattr(args, "in_dir", None) or out)
        if args.command == "synth":
            return cmd_synth(cfg, out)
        if args.command == "ingest":
            return cmd_ingest(cfg, out)
        if args.command == "score":
            return cmd_score(cfg, out)
        if args.command == "fit":
            return cmd_fit(cfg, out, in_dir)
        if args.command == "featurize":
            return cmd_featurize(cfg, out, in_dir)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out, in_dir)
        if args.command == "report":
            return cmd_report(cfg, out, in_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
