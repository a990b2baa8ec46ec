"""Command-line surface: exit codes, file outputs, determinism, no input mutation."""

import hashlib
import json

import numpy as np
import pytest

from embshrink import load_embeddings, save_embeddings
from embshrink.cli import main

from conftest import random_set


def run_cli(*argv):
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse errors
        return int(exc.code)


@pytest.fixture
def sample_csv(tmp_path):
    path = tmp_path / "fixture.csv"
    rows = ["id,label_name,split,v0,v1,v2"]
    rng = np.random.default_rng(0)
    for i in range(10):
        name = ["shirt", "coat", "dress"][i % 3]
        vec = ",".join(f"{float(np.float32(x)):.9g}" for x in rng.normal(size=3))
        rows.append(f"{i},{name},train,{vec}")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def synth_file(tmp_path):
    out = tmp_path / "synth.emb"
    code = run_cli(
        "synth", "--classes", "6", "--views", "2", "--points", "20", "--dim", "16",
        "--noise-fraction", "0.2", "--seed", "5", "--out", str(out),
    )
    assert code == 0
    return out


class TestIngestExport:
    def test_ingest_valid_csv(self, sample_csv, tmp_path, capsys):
        out = tmp_path / "fixture.emb"
        assert run_cli("ingest", "--in", str(sample_csv), "--out", str(out)) == 0
        assert "10 records, 3 classes" in capsys.readouterr().out
        assert len(load_embeddings(out)) == 10

    def test_ingest_ragged_row_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,label_name,split,v0,v1\n1,a,train,0.5,1\n2,b,train,7\n")
        out = tmp_path / "bad.emb"
        assert run_cli("ingest", "--in", str(bad), "--out", str(out)) == 2
        assert "line 3" in capsys.readouterr().err

    def test_round_trip_matches_input_csv(self, sample_csv, tmp_path):
        emb = tmp_path / "x.emb"
        back = tmp_path / "back.csv"
        assert run_cli("ingest", "--in", str(sample_csv), "--out", str(emb)) == 0
        assert run_cli("export", "--in", str(emb), "--out", str(back)) == 0
        assert back.read_text() == sample_csv.read_text()

    def test_missing_input_file_exits_2(self, tmp_path):
        assert run_cli("export", "--in", str(tmp_path / "nope.emb"), "--out", str(tmp_path / "o.csv")) == 2


class TestSynth:
    def test_requires_seed(self, tmp_path):
        code = run_cli(
            "synth", "--classes", "2", "--points", "5", "--dim", "4",
            "--out", str(tmp_path / "s.emb"),
        )
        assert code == 2

    def test_writes_set_and_noise_sidecar(self, synth_file):
        dataset = load_embeddings(synth_file)
        assert len(dataset) == 6 * 2 * 20
        sidecar = json.loads((synth_file.parent / (synth_file.name + ".noise.json")).read_text())
        assert len(sidecar["noise_ids"]) == round(0.2 * len(dataset))

    def test_split_outputs(self, tmp_path):
        out = tmp_path / "s.emb"
        code = run_cli(
            "synth", "--classes", "3", "--points", "10", "--dim", "8", "--seed", "1",
            "--out", str(out), "--test-fraction", "0.2", "--split-seed", "9",
        )
        assert code == 0
        train = load_embeddings(tmp_path / "s.train.emb")
        test = load_embeddings(tmp_path / "s.test.emb")
        assert len(train) + len(test) == 30
        assert len(test) == 6

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["synth", "--classes", "4", "--points", "8", "--dim", "8", "--seed", "3"]
        a, b = tmp_path / "a.emb", tmp_path / "b.emb"
        assert run_cli(*args, "--out", str(a)) == 0
        assert run_cli(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestScoreFilterSelect:
    def test_score_writes_row_per_record(self, synth_file, tmp_path):
        scores = tmp_path / "scores.csv"
        assert run_cli("score", "--neighbors", "10", "--in", str(synth_file), "--out", str(scores)) == 0
        assert len(scores.read_text().splitlines()) == 240 + 1

    def test_filter_roundtrip(self, synth_file, tmp_path):
        scores = tmp_path / "scores.csv"
        run_cli("score", "--neighbors", "10", "--in", str(synth_file), "--out", str(scores))
        filtered = tmp_path / "filtered.emb"
        code = run_cli(
            "filter", "--in", str(synth_file), "--scores", str(scores),
            "--neighbors", "10", "--threshold", "0.5", "--out", str(filtered),
        )
        assert code == 0
        assert 0 < len(load_embeddings(filtered)) < 240

    def test_select_cs_density_writes_subset_and_provenance(self, synth_file, tmp_path):
        out = tmp_path / "subset.emb"
        code = run_cli(
            "select", "--in", str(synth_file), "--method", "cs-density",
            "--threshold", "0.4", "--neighbors", "10", "--min-cluster", "3",
            "--out", str(out),
        )
        assert code == 0
        subset = load_embeddings(out)
        assert 0 < len(subset) < 240
        provenance = json.loads((tmp_path / "subset.emb.provenance.json").read_text())
        assert provenance["method"] == "cs-density-medoid"
        assert provenance["params"]["cscore_threshold"] == 0.4
        assert provenance["source_digest"]

    def test_stochastic_select_requires_seed(self, synth_file, tmp_path):
        code = run_cli(
            "select", "--in", str(synth_file), "--method", "uniform",
            "--fraction", "0.2", "--out", str(tmp_path / "u.emb"),
        )
        assert code == 2

    def test_unknown_method_exits_2(self, synth_file, tmp_path):
        code = run_cli(
            "select", "--in", str(synth_file), "--method", "quantum",
            "--out", str(tmp_path / "q.emb"),
        )
        assert code == 2

    def test_select_rerun_identical(self, synth_file, tmp_path):
        a, b = tmp_path / "a.emb", tmp_path / "b.emb"
        args = [
            "select", "--in", str(synth_file), "--method", "kcenter",
            "--fraction", "0.15", "--seed", "2",
        ]
        assert run_cli(*args, "--out", str(a)) == 0
        assert run_cli(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_inputs_never_mutated(self, synth_file, tmp_path):
        before = hashlib.sha256(synth_file.read_bytes()).hexdigest()
        run_cli(
            "select", "--in", str(synth_file), "--method", "cs-kmeans",
            "--k-per-class", "3", "--seed", "1", "--representative", "centroid",
            "--out", str(tmp_path / "out.emb"),
        )
        assert hashlib.sha256(synth_file.read_bytes()).hexdigest() == before


class TestEvalSweepBench:
    def test_eval_writes_report(self, tmp_path):
        train = random_set(60, 8, 3, seed=1)
        test = random_set(15, 8, 3, seed=2, ids=np.arange(100, 115, dtype=np.uint64))
        train_path, test_path = tmp_path / "train.emb", tmp_path / "test.emb"
        save_embeddings(train, train_path)
        save_embeddings(test, test_path)
        out = tmp_path / "report.json"
        code = run_cli(
            "eval", "--db", str(train_path), "--test", str(test_path),
            "--ks", "1,5", "--out", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["db_size"] == 60
        assert set(report["metrics"]) == {"top1", "top5"}

    def test_sweep_row_count_and_determinism(self, synth_file, tmp_path):
        config = {
            "data": str(synth_file),
            "test_fraction": 0.25,
            "split_seed": 4,
            "fractions": [0.2, 0.5],
            "ks": [1],
            "seeds": [0, 1],
            "methods": [{"kind": "uniform"}, {"kind": "herding"}],
        }
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(json.dumps(config))
        out_a, out_b = tmp_path / "run_a", tmp_path / "run_b"
        assert run_cli("sweep", "--config", str(cfg_path), "--out-dir", str(out_a)) == 0
        assert run_cli("sweep", "--config", str(cfg_path), "--out-dir", str(out_b), "--jobs", "3") == 0
        lines_a = (out_a / "reports.csv").read_text().splitlines()
        assert len(lines_a) == 1 + 2 * 2 * 2  # header + fractions x methods x seeds
        strip = lambda lines: [",".join(l.split(",")[:-1]) for l in lines]  # drop timing col
        assert strip(lines_a) == strip((out_b / "reports.csv").read_text().splitlines())

    def test_sweep_rejects_unknown_keys(self, synth_file, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"data": str(synth_file), "bogus": 1, "methods": [{"kind": "uniform"}], "seeds": [0]}))
        assert run_cli("sweep", "--config", str(cfg_path), "--out-dir", str(tmp_path / "o")) == 2

    def test_sweep_requires_seeds(self, synth_file, tmp_path):
        cfg_path = tmp_path / "noseeds.json"
        cfg_path.write_text(
            json.dumps({"data": str(synth_file), "test_fraction": 0.2, "split_seed": 1,
                        "methods": [{"kind": "uniform"}]})
        )
        assert run_cli("sweep", "--config", str(cfg_path), "--out-dir", str(tmp_path / "o")) == 2

    def test_bench_writes_csv(self, tmp_path):
        s = random_set(600, 8, 3, seed=3)
        path = tmp_path / "db.emb"
        save_embeddings(s, path)
        out = tmp_path / "bench.csv"
        code = run_cli(
            "bench", "--in", str(path), "--sizes", "200,400", "--batch", "8",
            "--repetitions", "2", "--seed", "0", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "size,mean_query_micros,median_query_micros,stddev_micros"
        assert len(lines) == 3

    def test_bench_requires_seed_when_sampling(self, tmp_path):
        s = random_set(100, 4, 2, seed=4)
        path = tmp_path / "db.emb"
        save_embeddings(s, path)
        assert run_cli("bench", "--in", str(path), "--sizes", "50", "--out", str(tmp_path / "b.csv")) == 2
