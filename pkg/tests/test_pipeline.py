import csv
import json

import numpy as np
import pytest

from tradecast.exceptions import ValidationError
from tradecast.pipeline import (PipelineConfig, StageError, bundled_path, load_config,
                                read_config_file, rerun_from_manifest, run_pipeline)

TABLES = ["revealed", "nrca", "adf_levels", "adf_differenced",
          "candidates", "models", "diagnostics", "holdout",
          "forecast", "outliers"]


def ref_config(out, **extra):
    return load_config("bundled:reference.cfg", {"output_dir": str(out), **extra}, environ={})


def rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def ref_run(tmp_path_factory):
    return run_pipeline(ref_config(tmp_path_factory.mktemp("reference")))


def with_extra_column(tmp_path, values=1.5 ** np.arange(21)):
    """Bundled table plus category 9999 (by default growing by half each year)."""
    lines = bundled_path("us_nrca.csv").read_text(encoding="utf-8").splitlines()
    out = []
    for ln in lines:
        if ln.startswith("#"):
            continue
        out.append(ln + (",9999" if ln.startswith("year") else f",{values[int(ln[:4]) - 1996]:.4f}"))
    path = tmp_path / "nrca.csv"
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def test_reference_tables(ref_run):
    t = ref_run.tables
    assert sorted(t) == sorted(TABLES)
    models = {r["category"]: r for r in rows(t["models"])}
    assert {c: (int(r["p"]), int(r["d"]), int(r["q"])) for c, r in models.items()} == {
        "5201": (0, 1, 0), "5502": (2, 0, 0), "5603": (0, 1, 0), "5205": (0, 1, 0),
        "5703": (1, 0, 0), "6309": (0, 1, 0)}
    assert models["5703"]["converged"] == "no"
    outl = {r["category"]: (r["additive_outlier"], r["level_shift"]) for r in rows(t["outliers"])}
    assert outl == {"5201": ("1999", "-"), "5502": ("-", "1997"), "5603": ("-", "2007"),
                    "5205": ("2011", "-"), "5703": ("-", "1997"), "6309": ("-", "-")}
    fc = rows(t["forecast"])
    assert [(r["category"], r["year"], r["direction"]) for r in fc if r["category"] == "5703"] == [
        ("5703", "2017", "▼"), ("5703", "2018", "■")]
    assert sorted(ref_run.plots) == sorted(models)
    assert all(p.exists() for p in [*t.values(), *ref_run.plots.values(), ref_run.manifest])


def test_revealed_order(ref_run):
    assert [r["category"] for r in rows(ref_run.tables["revealed"])] == [
        "5201", "5502", "5603", "5703", "5205", "6309"]


def test_byte_identical_reruns(ref_run, tmp_path):
    again = run_pipeline(ref_config(tmp_path, workers=3))
    for name, path in ref_run.tables.items():
        assert path.read_bytes() == again.tables[name].read_bytes(), name
    for code, path in ref_run.plots.items():
        assert path.read_bytes() == again.plots[code].read_bytes()


def test_manifest(ref_run, tmp_path):
    doc = json.loads(ref_run.manifest.read_text(encoding="utf-8"))
    assert doc["config"]["critical"] == 2.6 and doc["stage"] == "outliers"
    assert set(doc["versions"]) >= {"tradecast", "numpy", "scipy", "python"}
    assert len(doc["outputs"]) == len(TABLES) + 6
    bundle, same = rerun_from_manifest(ref_run.manifest, str(tmp_path / "again"))
    assert same and all(same.values())
    assert bundle.output_dir == tmp_path / "again"


def test_manifest_detects_change(ref_run, tmp_path):
    doc = json.loads(ref_run.manifest.read_text(encoding="utf-8"))
    doc["outputs"]["models.csv"] = "0" * 64
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    _, same = rerun_from_manifest(path, str(tmp_path / "out"))
    assert not same["models.csv"] and same["outliers.csv"]


def test_test_year_must_follow_train_end(tmp_path, monkeypatch):
    import tradecast.pipeline as pl

    def boom(*a, **k):
        raise AssertionError("data was touched")

    monkeypatch.setattr(pl, "load_series", boom)
    with pytest.raises(ValidationError, match="test_year"):
        run_pipeline(PipelineConfig(train_end=2016, test_year=2016, output_dir=str(tmp_path / "x")))
    assert not (tmp_path / "x").exists()


def test_config_file_and_precedence(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("[run]\ncritical = 3.1  # stricter\nlb_lag = 8\ninput_path = data/x.csv\n",
                        encoding="utf-8")
    assert read_config_file(cfg_path)["critical"] == "3.1"
    cfg = load_config(cfg_path, environ={})
    assert cfg.critical == 3.1 and cfg.lb_lag == 8
    assert cfg.path(cfg.input_path) == tmp_path / "data" / "x.csv"
    cfg = load_config(cfg_path, environ={"TRADECAST_CRITICAL": "2.9", "TRADECAST_LB_LAG": "7",
                                         "OTHER": "1"})
    assert (cfg.critical, cfg.lb_lag) == (2.9, 7)
    cfg = load_config(cfg_path, {"critical": 3.3}, environ={"TRADECAST_CRITICAL": "2.9"})
    assert cfg.critical == 3.3


@pytest.mark.parametrize("overrides", [{"bogus": 1}, {"critical": "high"}, {"plots": "maybe"},
                                       {"format": "xlsx"}, {"alpha": 1.5}, {"chapters": "a-b"},
                                       {"input_mode": "sql"}])
def test_invalid_config(overrides):
    with pytest.raises(ValidationError):
        load_config(None, overrides, environ={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "nope.cfg", environ={})


def test_trade_mode_matches_nrca_mode(ref_run, tmp_path):
    cfg = ref_config(tmp_path, input_mode="trade", input_path="bundled:trade_fixture.csv",
                       chapters="50-67")
    bundle = run_pipeline(cfg)
    for name in ["models", "diagnostics", "holdout",
                 "forecast", "outliers", "revealed"]:
        assert bundle.tables[name].read_bytes() == ref_run.tables[name].read_bytes(), name


def test_stage_error_names_category(tmp_path):
    src = with_extra_column(tmp_path)
    cfg = ref_config(tmp_path / "o", input_path=str(src), candidates="auto", max_d=1)
    with pytest.raises(StageError) as err:
        run_pipeline(cfg)
    assert err.value.category == "9999" and err.value.stage == "adf"
    assert "9999" in str(err.value)


def test_keep_going(tmp_path):
    src = with_extra_column(tmp_path)
    cfg = ref_config(tmp_path / "o", input_path=str(src), candidates="auto", max_d=1,
                       keep_going=True, categories="5201,9999")
    bundle = run_pipeline(cfg)
    failed = {r.commodity: r.failed for r in bundle.results if r.failed}
    assert list(failed) == ["9999"] and failed["9999"].startswith("adf")
    assert [r["category"] for r in rows(bundle.tables["models"])] == ["5201"]
    assert json.loads(bundle.manifest.read_text(encoding="utf-8"))["failed"] == failed


def test_missing_candidates_category(tmp_path):
    noise = 10 + np.random.default_rng(0).standard_normal(21)
    src = with_extra_column(tmp_path, noise)
    with pytest.raises(StageError) as err:
        run_pipeline(ref_config(tmp_path / "o", input_path=str(src), categories="9999"))
    assert (err.value.category, err.value.stage) == ("9999", "identify")
    assert isinstance(err.value.cause, ValidationError)


@pytest.mark.parametrize("upto,expected", [
    ("nrca", {"nrca"}),
    ("screen", {"revealed", "nrca"}),
    ("adf", {"revealed", "nrca", "adf_levels", "adf_differenced"}),
    ("fit", set(TABLES) - {"holdout", "forecast", "outliers"}),
])
def test_partial_stages(tmp_path, upto, expected):
    bundle = run_pipeline(ref_config(tmp_path), upto=upto, manifest=False)
    assert set(bundle.tables) == expected and bundle.manifest is None and not bundle.plots


def test_txt_format(tmp_path):
    bundle = run_pipeline(ref_config(tmp_path, format="txt", plots=False), upto="fit")
    text = bundle.tables["models"].read_text(encoding="utf-8")
    assert bundle.tables["models"].suffix == ".txt"
    assert text.splitlines()[0].split() == ["category", "p", "d", "q", "aic", "converged"]


def test_auto_identification_runs(tmp_path):
    bundle = run_pipeline(ref_config(tmp_path, candidates="auto", plots=False))
    models = {r["category"]: (r["p"], r["d"], r["q"]) for r in rows(bundle.tables["models"])}
    assert models["5201"] == ("0", "1", "0") and models["5703"] == ("1", "0", "0")
    assert np.all([len(r.candidates) > 0 for r in bundle.results])
