import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

from ngw.cli import EXIT_CONFIG, EXIT_OK, main

TINY_TRAIN = [
    "--set", "train.outer_iters=40",
    "--set", "train.batch_size=16",
    "--set", "train.hidden_width=8",
]


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfigHandling:
    def test_unknown_key_rejected(self, tmp_path):
        code = main(["gauss", "--out", str(tmp_path / "o"),
                     "--set", "no_such_key=1"])
        assert code == EXIT_CONFIG

    def test_unknown_nested_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"bogus": 3}}))
        code = main(["gauss", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_empty_dims_rejected_before_work(self, tmp_path):
        code = main(["gauss", "--out", str(tmp_path / "o"),
                     "--set", "dims=[]"])
        assert code == EXIT_CONFIG

    def test_bad_toy_case_rejected(self, tmp_path):
        code = main(["toy", "--out", str(tmp_path / "o"),
                     "--set", 'case="hexagon"'])
        assert code == EXIT_CONFIG

    def test_missing_align_files_rejected(self, tmp_path):
        code = main(["align", "--out", str(tmp_path / "o"),
                     "--set", 'source="/nonexistent.txt"',
                     "--set", 'target="/nonexistent.txt"'])
        assert code == EXIT_CONFIG

    def test_seed_and_set_overrides_recorded(self, tmp_path):
        out = tmp_path / "o"
        code = main(["discrete", "--out", str(out), "--seed", "99",
                     "--set", "points=32", "--set", "fresh_points=64",
                     "--set", "source.dim=3", "--set", "target.dim=2",
                     "--set", "compute_lr=false"])
        assert code == EXIT_OK
        cfg = json.loads((out / "config.json").read_text())
        assert cfg["seed"] == 99
        assert cfg["points"] == 32
        assert cfg["compute_lr"] is False

    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "ngw.cli", "--help"],
                              capture_output=True)
        assert proc.returncode == 0
        assert b"gauss" in proc.stdout


class TestGaussCommand:
    def run_tiny(self, out: Path, seed="7"):
        return main(["gauss", "--out", str(out), "--seed", seed,
                     "--set", "dims=[[3,2]]", "--set", "eval_samples=512",
                     *TINY_TRAIN])

    def test_artifacts_and_schema(self, tmp_path):
        out = tmp_path / "g"
        assert self.run_tiny(out) == EXIT_OK
        rows = read_csv(out / "results.csv")
        methods = {r["method"] for r in rows}
        assert methods == {"gt", "ngw"}
        for r in rows:
            assert r["schema_version"] == "1"
            float(r["value"])
        agg = read_csv(out / "aggregate.csv")
        assert len(agg) == 1
        assert float(agg[0]["gt_innergw"]) > 0
        assert (out / "history-gauss-m3-n2-s0.csv").exists()
        assert (out / "checkpoint-gauss-m3-n2-s0.json").exists()

    def test_baselines_add_rows(self, tmp_path):
        out = tmp_path / "gb"
        code = main(["gauss", "--out", str(out), "--seed", "3",
                     "--set", "dims=[[3,2]]", "--set", "eval_samples=256",
                     "--set", "baselines.discrete=true",
                     "--set", "baselines.discrete_lr=true",
                     "--set", "baselines.points=48",
                     "--set", "baselines.fresh_points=64",
                     *TINY_TRAIN])
        assert code == EXIT_OK
        methods = {r["method"] for r in read_csv(out / "results.csv")}
        assert {"gt", "ngw", "discrete", "discrete_lr"} <= methods

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert self.run_tiny(a) == EXIT_OK
        assert self.run_tiny(b) == EXIT_OK
        for name in ("results.csv", "aggregate.csv",
                     "history-gauss-m3-n2-s0.csv",
                     "checkpoint-gauss-m3-n2-s0.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestToyCommand:
    def test_artifacts(self, tmp_path):
        out = tmp_path / "t"
        code = main(["toy", "--out", str(out), "--seed", "1",
                     "--set", "samples=200", "--set", "discrete_subsample=40",
                     "--set", "energy_points=64",
                     "--set", "energy_permutations=19",
                     *TINY_TRAIN])
        assert code == EXIT_OK
        seed_dir = out / "seed-0"
        for name in ("source.csv", "target.csv", "mapped.csv",
                     "discrete_mapped.csv", "history.csv", "checkpoint.json"):
            assert (seed_dir / name).exists()
        svg_root = ET.parse(seed_dir / "toy.svg").getroot()
        assert svg_root.tag.endswith("svg")
        rows = read_csv(out / "results.csv")
        assert rows[0]["case"] == "circle-10-5"
        assert 0.0 <= float(rows[0]["energy_pvalue"]) <= 1.0

    def test_cube_case_runs(self, tmp_path):
        out = tmp_path / "t3"
        code = main(["toy", "--out", str(out), "--seed", "2",
                     "--set", 'case="cube-to-circle"',
                     "--set", "samples=150", "--set", "discrete_subsample=30",
                     "--set", "energy_points=50",
                     "--set", "energy_permutations=19",
                     *TINY_TRAIN])
        assert code == EXIT_OK
        src = read_csv(out / "seed-0" / "source.csv")
        assert {"x0", "x1", "x2", "component"} <= set(src[0])
        mapped = read_csv(out / "seed-0" / "mapped.csv")
        assert {"x0", "x1", "component"} <= set(mapped[0])


class TestAlignCommand:
    def test_synthetic_pipeline(self, tmp_path):
        out = tmp_path / "al"
        code = main(["align", "--out", str(out), "--seed", "5",
                     "--set", 'synthetic={"count": 300, "src_dim": 6, '
                              '"tgt_dim": 3, "snr_db": 20.0}',
                     "--set", "train.outer_iters=60",
                     "--set", "train.batch_size=32",
                     "--set", "train.hidden_width=16"])
        assert code == EXIT_OK
        rows = read_csv(out / "accuracy.csv")
        assert {(r["split"], r["k"]) for r in rows} == {
            ("train", "1"), ("train", "5"), ("train", "10"),
            ("test", "1"), ("test", "5"), ("test", "10")}
        for r in rows:
            assert 0.0 <= float(r["accuracy"]) <= 1.0
        assert (out / "history.csv").exists()
        assert (out / "checkpoint.json").exists()

    def test_file_pipeline_with_lexicon(self, tmp_path):
        import numpy as np

        rng = np.random.default_rng(0)
        vocab = [f"word{i}" for i in range(40)]
        src = tmp_path / "src.txt"
        tgt = tmp_path / "tgt.txt"
        for path, d in ((src, 4), (tgt, 3)):
            with open(path, "w") as fh:
                for w in vocab:
                    vals = " ".join(repr(float(v))
                                    for v in rng.standard_normal(d))
                    fh.write(f"{w} {vals}\n")
        lex = tmp_path / "lex.txt"
        lex.write_text("\n".join(f"{w} {w}" for w in vocab))
        out = tmp_path / "alf"
        code = main(["align", "--out", str(out), "--seed", "6",
                     "--set", f'source="{src}"', "--set", f'target="{tgt}"',
                     "--set", f'lexicon="{lex}"',
                     "--set", "split_fraction=0.75",
                     "--set", "topk=[1, 5]",
                     "--set", "train.outer_iters=30",
                     "--set", "train.batch_size=16",
                     "--set", "train.hidden_width=8"])
        assert code == EXIT_OK
        rows = read_csv(out / "accuracy.csv")
        assert len(rows) == 4


class TestDiscreteCommand:
    def test_artifacts(self, tmp_path):
        out = tmp_path / "d"
        code = main(["discrete", "--out", str(out), "--seed", "4",
                     "--set", "points=48", "--set", "fresh_points=96",
                     "--set", "source.dim=4", "--set", "target.dim=3"])
        assert code == EXIT_OK
        rows = read_csv(out / "results.csv")
        by_metric = {(r["method"], r["metric"]): float(r["value"]) for r in rows}
        assert ("discrete", "gw_cost") in by_metric
        assert ("discrete_lr", "innergw") in by_metric
        assert ("discrete_lr", "bw_uvp") in by_metric
        plan_rows = (out / "plan.csv").read_text().strip().split("\n")
        assert plan_rows[0] == "row,col,mass"
        assert len(plan_rows) > 1

    def test_toy_source_kinds(self, tmp_path):
        out = tmp_path / "dc"
        code = main(["discrete", "--out", str(out), "--seed", "8",
                     "--set", "points=40", "--set", "compute_lr=false",
                     "--set", 'source={"kind": "cube", "sigma": 0.1}',
                     "--set", 'target={"kind": "circle", "components": 8, '
                              '"sigma": 0.05}'])
        assert code == EXIT_OK
        rows = read_csv(out / "results.csv")
        assert rows[0]["metric"] == "gw_cost"
