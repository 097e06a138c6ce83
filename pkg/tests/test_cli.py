import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gentnow import cli
from gentnow.reporting import sha256_file


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def city(tmp_path_factory):
    out = tmp_path_factory.mktemp("city")
    assert run("synth", "--out", out, "--seed", "11",
               "--neighborhoods", "48",
               "--config", _synth_cfg(out)) == 0
    return out


def _synth_cfg(out):
    # smaller city keeps the CLI suite quick
    path = Path(out) / "synth_config.json"
    path.write_text(json.dumps({
        "synth": {"reviews_base": 10.0, "listings_base": 7.0},
        "seed": 11,
        "lda_iterations": 80,
        "lda_burn_in": 30,
        "lda_min_count": 2,
        "embedding_epochs": 6,
        "n_simulations": 8,
        "rf_trees": 25,
    }), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def results(city):
    out = city / "run"
    cfg = _merged_config(city)
    assert run("report", "--config", cfg, "--out", out) == 0
    return out


def _merged_config(city):
    base = json.loads((city / "config.json").read_text())
    extra = json.loads((city / "synth_config.json").read_text())
    extra.pop("synth")
    base.update(extra)
    path = city / "run_config.json"
    path.write_text(json.dumps(base), encoding="utf-8")
    return path


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestSynthCommand:
    def test_emits_five_data_files(self, city):
        for name in ("listings.csv", "reviews.csv", "socio_tw_minus_1.csv",
                     "socio_tw.csv", "ground_truth.csv"):
            assert (city / name).exists()

    def test_ground_truth_row_count(self, city):
        assert len(_read(city / "ground_truth.csv")) == 48

    def test_same_seed_identical_checksums(self, tmp_path):
        for sub in ("a", "b"):
            assert run("synth", "--out", tmp_path / sub, "--seed", "7",
                       "--neighborhoods", "16") == 0
        for name in ("listings.csv", "reviews.csv", "ground_truth.csv"):
            assert sha256_file(tmp_path / "a" / name) == sha256_file(tmp_path / "b" / name)

    def test_manifest_written(self, city):
        manifest = json.loads((city / "manifest_synth.json").read_text())
        assert manifest["seed"] == 11
        assert "listings.csv" in manifest["artifacts"]


class TestScoreCommand:
    def test_score_table_shape(self, results):
        rows = _read(results / "scores.csv")
        assert len(rows) == 48
        assert set(rows[0]) == {"neighborhood_id", "index_prev", "index_tw",
                                "score", "disadvantaged"}

    def test_summary_matches_bruteforce_recomputation(self, results):
        rows = _read(results / "scores.csv")
        dis = [float(r["score"]) for r in rows if r["disadvantaged"] == "1"]
        summary = {(r["measure"], r["window"]): r for r in _read(results / "score_summary.csv")}
        got = summary[("gentrification_score", "delta")]
        assert float(got["median"]) == pytest.approx(float(np.median(dis)), abs=1e-6)
        assert float(got["sd"]) == pytest.approx(float(np.std(dis, ddof=1)), abs=1e-6)
        assert int(summary[("disadvantaged_neighborhoods", "")]["median"]) == len(dis)

    def test_histogram_counts_match_scores(self, results):
        rows = _read(results / "scores.csv")
        dis = [float(r["score"]) for r in rows if r["disadvantaged"] == "1"]
        hist = _read(results / "score_histogram.csv")
        assert sum(int(r["count"]) for r in hist) == len(dis)
        assert (results / "score_histogram.svg").exists()


class TestFeaturizeCommand:
    def test_column_count(self, results):
        header = open(results / "features.csv", encoding="utf-8").readline().strip().split(",")
        k = sum(1 for c in header if c.startswith("topic_"))
        d = sum(1 for c in header if c.startswith("embedding_"))
        assert k == 5 and d == 25
        assert len(header) == 2 + 6 + 4 + k + d  # id + score + features

    def test_rows_are_disadvantaged_and_active(self, results):
        feats = _read(results / "features.csv")
        scores = {r["neighborhood_id"]: r for r in _read(results / "scores.csv")}
        assert 0 < len(feats) <= 48
        for row in feats:
            assert scores[row["neighborhood_id"]]["disadvantaged"] == "1"

    def test_rerun_with_persisted_models_identical(self, city, results):
        out2 = city / "run2"
        cfg = _merged_config(city)
        assert run("featurize", "--config", cfg, "--out", out2, "--in", results) == 0
        assert sha256_file(out2 / "features.csv") == sha256_file(results / "features.csv")
        assert sha256_file(out2 / "review_features.csv") == sha256_file(
            results / "review_features.csv")

    def test_models_persisted(self, results):
        assert (results / "topic_model" / "meta.json").exists()
        assert (results / "embedding_model" / "meta.json").exists()

    def test_imputation_flags_emitted(self, results):
        assert (results / "imputed.csv").exists()


class TestEvaluateCommand:
    def test_baseline_rows_present(self, results):
        rows = _read(results / "rmse.csv")
        regimes = {(r["model"], r["regime"]) for r in rows}
        assert ("baseline", "in_sample") in regimes
        assert ("baseline", "out_of_sample") in regimes
        assert ("random_forest", "out_of_sample") in regimes

    def test_expected_artifacts(self, results):
        for name in ("correlations.csv", "cross_corr_features.csv",
                     "cross_corr_socio.csv", "rmse.csv", "rmse.svg", "mdi.csv",
                     "mdi_top5.csv", "topic_quartiles.csv",
                     "location_words_quartiles.csv", "component_scatter.csv",
                     "component_scatter.svg", "evaluation_report.txt",
                     "manifest_evaluate.json"):
            assert (results / name).exists(), name

    def test_mdi_sums_to_100(self, results):
        rows = _read(results / "mdi.csv")
        assert sum(float(r["mdi_pct"]) for r in rows) == pytest.approx(100.0, abs=1e-3)

    def test_correlations_cover_every_feature(self, results):
        header = open(results / "features.csv", encoding="utf-8").readline().strip().split(",")
        feats = set(header[2:])
        corr = {r["feature"] for r in _read(results / "correlations.csv")}
        assert corr == feats

    def test_rerun_byte_identical(self, city, results):
        cfg = _merged_config(city)
        before = {p.name: sha256_file(p) for p in results.iterdir() if p.is_file()}
        assert run("evaluate", "--config", cfg, "--out", results, "--in", results) == 0
        after = {p.name: sha256_file(p) for p in results.iterdir() if p.is_file()}
        for name in ("rmse.csv", "correlations.csv", "mdi.csv",
                     "evaluation_report.txt", "manifest_evaluate.json"):
            assert before[name] == after[name]


class TestErrorHandling:
    def test_missing_seed_is_config_error(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{}", encoding="utf-8")
        assert run("score", "--config", cfg, "--out", tmp_path) == cli.EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"seed": 1, "bogus_key": 2}', encoding="utf-8")
        assert run("score", "--config", cfg, "--out", tmp_path) == cli.EXIT_CONFIG

    def test_missing_input_path(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "socio_prev": "/nope.csv",
                                   "socio_tw": "/nope2.csv"}), encoding="utf-8")
        assert run("score", "--config", cfg, "--out", tmp_path) == cli.EXIT_CONFIG

    def test_duplicate_socio_row_is_ingest_error(self, tmp_path):
        bad = tmp_path / "socio.csv"
        bad.write_text(
            "neighborhood_id,window,age,education,housing,income\n"
            "a,tw_minus_1,1,2,3,4\na,tw_minus_1,5,6,7,8\n", encoding="utf-8")
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "socio_prev": str(bad),
                                   "socio_tw": str(bad)}), encoding="utf-8")
        assert run("score", "--config", cfg, "--out", tmp_path) == cli.EXIT_INGEST

    def test_race_target_without_race_data(self, city, tmp_path):
        cfg = _merged_config(city)
        assert run("score", "--config", cfg, "--out", tmp_path,
                   "--target", "race") == cli.EXIT_COMPUTE

    def test_evaluate_without_featurize(self, city, tmp_path):
        cfg = _merged_config(city)
        assert run("evaluate", "--config", cfg, "--out", tmp_path,
                   "--in", tmp_path) == cli.EXIT_CONFIG

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"seed": 1}', encoding="utf-8")
        assert run("synth", "--config", cfg, "--out", tmp_path / "x",
                   "--seed", "99", "--neighborhoods", "16") == 0
        manifest = json.loads((tmp_path / "x" / "manifest_synth.json").read_text())
        assert manifest["seed"] == 99


class TestIngestCommand:
    def test_ingest_report(self, city, tmp_path):
        cfg = _merged_config(city)
        assert run("ingest", "--config", cfg, "--out", tmp_path) == 0
        text = (tmp_path / "ingest_report.txt").read_text()
        assert "reconciles=True" in text
        assert "active" in text


class TestTargetVariants:
    def test_single_measure_target(self, city, tmp_path):
        cfg = _merged_config(city)
        assert run("score", "--config", cfg, "--out", tmp_path,
                   "--target", "income") == 0
        rows = _read(tmp_path / "score_components.csv")
        assert "income_pct_delta" in rows[0]
        assert "age_pct_delta" not in rows[0]

    def test_feature_set_flag_restricts_study(self, city, results, tmp_path):
        cfg = _merged_config(city)
        assert run("evaluate", "--config", cfg, "--out", tmp_path,
                   "--in", results, "--feature-set", "structured") == 0
        rows = _read(tmp_path / "rmse.csv")
        sets = {r["feature_set"] for r in rows}
        assert sets == {"none", "structured"}  # baseline row always present
