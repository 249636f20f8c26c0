import json
from argparse import Namespace
from types import SimpleNamespace

import numpy as np
import pytest

from convperf.cli import (
    CONFIG_ENV,
    CliError,
    RunConfig,
    config_hash,
    load_run_config,
    main,
)
from convperf.features import FeatureSchema
from convperf.regressors import load_model


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full file-based run shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    paths = SimpleNamespace(
        root=root,
        raw=root / "raw.jsonl",
        kept=root / "kept.jsonl",
        tagged=root / "tagged.jsonl",
        feats=root / "features.csv",
        model=root / "ridge.json",
    )
    assert main(["synth", "--out", str(paths.raw), "--n", "240", "--seed", "0"]) == 0
    assert main(["ingest", "--in", str(paths.raw), "--out", str(paths.kept)]) == 0
    assert main(["tag", "--in", str(paths.kept), "--out", str(paths.tagged)]) == 0
    assert (
        main(
            [
                "featurize",
                "--in", str(paths.tagged),
                "--out", str(paths.feats),
                "--seed", "0",
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "train",
                "--features", str(paths.feats),
                "--model-out", str(paths.model),
                "--family", "ridge",
                "--lambda", "1.0",
                "--target", "length",
                "--seed", "0",
            ]
        )
        == 0
    )
    return paths


def test_pipeline_artifacts(pipeline):
    raw_lines = pipeline.raw.read_text().splitlines()
    kept_lines = pipeline.kept.read_text().splitlines()
    assert len(raw_lines) == 240
    assert 0 < len(kept_lines) < 240
    assert pipeline.feats.read_text().startswith("id,")

    model = load_model(pipeline.model)
    assert model.spec.family == "ridge"
    assert model.spec.hyperparameters == {"lambda": 1.0}
    assert model.target.kind == "capped_length"
    assert model.feature_names == FeatureSchema().names("independent")
    assert model.standardizer is not None


def test_evaluate_is_byte_deterministic(pipeline):
    rep1 = pipeline.root / "rep1.csv"
    rep2 = pipeline.root / "rep2.csv"
    argv = [
        "evaluate",
        "--features", str(pipeline.feats),
        "--model", str(pipeline.model),
    ]
    assert main(argv + ["--report-out", str(rep1)]) == 0
    assert main(argv + ["--report-out", str(rep2)]) == 0
    assert rep1.read_bytes() == rep2.read_bytes()
    lines = rep1.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("model,target,")
    r2 = float(lines[1].split(",")[6])
    assert np.isfinite(r2)


def test_evaluate_prints_table(pipeline, capsys):
    assert (
        main(
            [
                "evaluate",
                "--features", str(pipeline.feats),
                "--model", str(pipeline.model),
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "model" in out and "ridge" in out and "capped_length" in out


def test_ablate_reports_base_and_ablated(pipeline):
    rep = pipeline.root / "ablate.csv"
    assert (
        main(
            [
                "ablate",
                "--features", str(pipeline.feats),
                "--drop", "length_median",
                "--report-out", str(rep),
                "--family", "ridge",
                "--lambda", "1.0",
                "--target", "length",
            ]
        )
        == 0
    )
    lines = rep.read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("ridge,")
    assert lines[2].startswith("ridge-ablated,")


def test_ablate_unknown_feature(pipeline, capsys):
    assert (
        main(
            [
                "ablate",
                "--features", str(pipeline.feats),
                "--drop", "no_such_feature",
            ]
        )
        == 1
    )
    assert "unknown feature names" in capsys.readouterr().err


def test_train_tree_then_export(pipeline, capsys):
    model_p = pipeline.root / "tree.json"
    dot_p = pipeline.root / "tree.dot"
    assert (
        main(
            [
                "train",
                "--features", str(pipeline.feats),
                "--model-out", str(model_p),
                "--family", "tree",
                "--max-depth", "5",
                "--min-leaf", "2",
                "--target", "length",
            ]
        )
        == 0
    )
    model = load_model(model_p)
    assert model.spec.hyperparameters == {"max_depth": 5, "min_leaf": 2}

    assert main(["export-tree", "--model", str(model_p), "--out", str(dot_p)]) == 0
    dot = dot_p.read_text()
    assert dot.startswith("digraph tree {")
    assert " <= " in dot

    capsys.readouterr()
    assert main(["export-tree", "--model", str(model_p)]) == 0
    assert capsys.readouterr().out.startswith("digraph tree {")

    assert (
        main(
            [
                "export-tree",
                "--model", str(model_p),
                "--depth-limit", "0",
                "--out", str(dot_p),
            ]
        )
        == 0
    )
    assert "(depth limit)" in dot_p.read_text()


def test_train_max_depth_negative_is_unbounded(pipeline):
    model_p = pipeline.root / "tree_unbounded.json"
    assert (
        main(
            [
                "train",
                "--features", str(pipeline.feats),
                "--model-out", str(model_p),
                "--family", "tree",
                "--max-depth", "-1",
                "--target", "length",
            ]
        )
        == 0
    )
    assert load_model(model_p).spec.hyperparameters["max_depth"] is None


def test_export_tree_rejects_linear_model(pipeline, capsys):
    assert main(["export-tree", "--model", str(pipeline.model)]) == 1
    assert "cannot export" in capsys.readouterr().err


def test_evaluate_missing_model(pipeline, capsys):
    missing = pipeline.root / "nope.json"
    assert (
        main(
            [
                "evaluate",
                "--features", str(pipeline.feats),
                "--model", str(missing),
            ]
        )
        == 1
    )
    err = capsys.readouterr().err
    assert "missing trained model" in err and "nope.json" in err


def test_missing_corpus_file(tmp_path, capsys):
    assert main(["correlate", "--in", str(tmp_path / "ghost.jsonl")]) == 1
    assert "missing corpus file" in capsys.readouterr().err


def test_evaluate_schema_mismatch(pipeline, capsys):
    union_feats = pipeline.root / "features_union.csv"
    assert (
        main(
            [
                "featurize",
                "--in", str(pipeline.tagged),
                "--out", str(union_feats),
                "--feature-set", "union",
                "--seed", "0",
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "evaluate",
                "--features", str(union_feats),
                "--model", str(pipeline.model),
            ]
        )
        == 1
    )
    assert "different feature schema" in capsys.readouterr().err


def test_correlate_outputs(pipeline, capsys):
    rep = pipeline.root / "corr.csv"
    assert (
        main(["correlate", "--in", str(pipeline.tagged), "--report-out", str(rep)])
        == 0
    )
    lines = rep.read_text().splitlines()
    assert lines[0] == "metric_a,metric_b,n,r,p_value,config_hash"
    assert len(lines) == 6
    assert "rating/length" in capsys.readouterr().out


def test_score_topics_outputs(pipeline, capsys):
    out_csv = pipeline.root / "topics.csv"
    assert (
        main(["score-topics", "--in", str(pipeline.tagged), "--out", str(out_csv)])
        == 0
    )
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "topic,raw_sum,z_score,config_hash"
    assert len(lines) > 1
    assert "intro" not in {l.split(",")[0] for l in lines[1:]}
    assert "topic scores (F1)" in capsys.readouterr().out


def test_plot_outputs(pipeline):
    out_dir = pipeline.root / "plots"
    assert main(["plot", "--in", str(pipeline.tagged), "--out-dir", str(out_dir)]) == 0
    for stem in ("length_hist", "rating_hist", "topic_z"):
        assert (out_dir / f"{stem}.svg").read_text().lstrip().startswith("<svg")
        assert (out_dir / f"{stem}.csv").exists()


def test_synth_preset_flag(tmp_path):
    out = tmp_path / "det.jsonl"
    assert (
        main(
            [
                "synth",
                "--out", str(out),
                "--n", "50",
                "--synth-preset", "deterministic",
            ]
        )
        == 0
    )
    assert len(out.read_text().splitlines()) == 50


def legacy_corpus_line():
    return json.dumps(
        {
            "id": "x1",
            "rating": 4,
            "exchanges": [
                {
                    "topic": "intro",
                    "rg": "intro",
                    "user": "hello there",
                    "system": "hi",
                    "midas": [],
                    "sda": [],
                },
                {
                    "topic": "movies",
                    "rg": "fact",
                    "user": "that's so cool",
                    "system": "ok",
                    "midas": [],
                    "sda": ["handmade"],
                },
            ],
        }
    )


def test_tag_union_versus_overwrite(tmp_path):
    src = tmp_path / "src.jsonl"
    src.write_text(legacy_corpus_line() + "\n")

    union_out = tmp_path / "union.jsonl"
    assert main(["tag", "--in", str(src), "--out", str(union_out)]) == 0
    rec = json.loads(union_out.read_text())
    assert rec["exchanges"][1]["sda"] == ["handmade", "sda_compliment"]

    over_out = tmp_path / "over.jsonl"
    assert main(["tag", "--in", str(src), "--out", str(over_out), "--overwrite"]) == 0
    rec = json.loads(over_out.read_text())
    assert rec["exchanges"][1]["sda"] == ["sda_compliment"]


# ---------------------------------------------------------------- config


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_defaults_without_config():
    assert load_run_config(Namespace()) == RunConfig()


def test_flags_override_config_file(tmp_path):
    path = write_config(tmp_path, {"seed": 1, "family": "lasso"})
    cfg = load_run_config(Namespace(config=path, seed=2))
    assert cfg.seed == 2
    assert cfg.family == "lasso"
    assert load_run_config(Namespace(config=path)).seed == 1


def test_env_names_default_config(tmp_path, monkeypatch):
    env_path = write_config(tmp_path, {"seed": 9}, "env.json")
    monkeypatch.setenv(CONFIG_ENV, env_path)
    assert load_run_config(Namespace()).seed == 9

    flag_path = write_config(tmp_path, {"seed": 4}, "flag.json")
    assert load_run_config(Namespace(config=flag_path)).seed == 4


def test_unknown_config_key(tmp_path):
    path = write_config(tmp_path, {"seeed": 3})
    with pytest.raises(CliError, match="unknown config keys"):
        load_run_config(Namespace(config=path))


def test_config_file_problems(tmp_path):
    with pytest.raises(CliError, match="missing config file"):
        load_run_config(Namespace(config=str(tmp_path / "gone.json")))
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(CliError, match="not valid JSON"):
        load_run_config(Namespace(config=str(bad)))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(CliError, match="JSON object"):
        load_run_config(Namespace(config=str(arr)))


def test_hyperparameter_flag_conversion():
    cfg = load_run_config(
        Namespace(lam=2.5, max_depth=-1, gamma="scale", hidden="8,4")
    )
    assert cfg.hyperparameters == {
        "lambda": 2.5,
        "max_depth": None,
        "gamma": "scale",
        "hidden": [8, 4],
    }
    cfg = load_run_config(Namespace(max_depth=4, gamma="0.25", no_bootstrap=True))
    assert cfg.hyperparameters == {
        "max_depth": 4,
        "gamma": 0.25,
        "bootstrap": False,
    }


def test_hidden_flag_rejects_garbage():
    with pytest.raises(CliError, match="hidden"):
        load_run_config(Namespace(hidden="eight"))


def test_config_hyperparameters_merge_with_flags(tmp_path):
    path = write_config(
        tmp_path, {"hyperparameters": {"lambda": 9.0, "min_leaf": 3}}
    )
    cfg = load_run_config(Namespace(config=path, lam=1.0))
    assert cfg.hyperparameters == {"lambda": 1.0, "min_leaf": 3}


@pytest.mark.parametrize(
    "ns,msg",
    [
        (Namespace(threads=0), "--threads"),
        (Namespace(prefix_k=0), "--prefix-k"),
        (Namespace(target="zzz"), "unknown target"),
        (Namespace(feature_set="zzz"), "unknown feature set"),
        (Namespace(family="zzz"), "unknown model family"),
        (Namespace(variant="F9"), "variant"),
        (Namespace(match_mode="fuzzy"), "match mode"),
        (Namespace(synth_preset="zzz"), "synth preset"),
    ],
)
def test_config_validation(ns, msg):
    with pytest.raises(CliError, match=msg):
        load_run_config(ns)


def test_split_must_have_three_ratios(tmp_path):
    path = write_config(tmp_path, {"split": [0.5, 0.5]})
    with pytest.raises(CliError, match="three ratios"):
        load_run_config(Namespace(config=path))


def test_config_hash_stability():
    a = config_hash(RunConfig())
    assert a == config_hash(RunConfig())
    assert a != config_hash(RunConfig(seed=1))
    assert len(a) == 16
    int(a, 16)
