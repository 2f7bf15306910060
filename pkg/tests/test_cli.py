import csv
import json
import math
import struct

import numpy as np
import pytest

from bevmine import cli
from bevmine.errors import DegenerateConfiguration, InvalidConfig, MismatchedInputs, UnsupportedVersion
from bevmine.metrics import CONFLICT_PAIRS
from bevmine.synth import NoiseModel, SceneSpec, corrupt, generate_scene


def _bits(x):
    return struct.pack("<d", float(x))


def _scene_floats(sample):
    out = []
    for b in sample.boxes:
        out += [*b.center, b.length, b.width, b.height, b.yaw]
    for d in sample.detections:
        out += [d.score, *d.bbox2d, *d.keypoints_bottom.ravel(), d.depth, *d.size, d.yaw, d.sigma]
    out += [*sample.rig.R.ravel(), *sample.rig.T, sample.rig.fx, sample.rig.fy, sample.rig.cx, sample.rig.cy]
    return out


def _write_config(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


def _csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _single_scene(tmp_path, n=10, seed=0, noise=None):
    sample = corrupt(generate_scene(SceneSpec(n_objects=n, seed=seed)), noise or NoiseModel(), seed)
    path = tmp_path / "scene.jsonl"
    cli.write_scenes(path, [sample])
    return path, sample


class TestSceneFile:
    def test_round_trip_bit_exact(self, tmp_path):
        samples = cli.make_scenes(cli.RunConfig(n_scenes=3))
        cli.write_scenes(tmp_path / "s.jsonl", samples)
        back = cli.read_scenes(tmp_path / "s.jsonl")
        assert len(back) == 3
        for a, b in zip(samples, back):
            assert a.spec.digest() == b.spec.digest() and a.gt_match == b.gt_match
            fa, fb = _scene_floats(a), _scene_floats(b)
            assert [_bits(x) for x in fa] == [_bits(x) for x in fb]

    def test_negative_zero_survives(self):
        text = cli.dumps({"a": -0.0, "b": [0.0, 1e-310, 0.1]})
        got = json.loads(text)
        assert math.copysign(1.0, float(got["a"])) < 0
        assert [_bits(float(v)) for v in got["b"]] == [_bits(v) for v in (0.0, 1e-310, 0.1)]

    def test_non_finite_written_as_null(self):
        assert cli.dumps([math.inf, math.nan]) == "[null,null]"

    def test_empty_scene(self, tmp_path):
        cfg = cli.RunConfig(scene=SceneSpec(n_objects=0), n_scenes=1)
        cli.cmd_generate(cfg, tmp_path / "e.jsonl")
        lines = (tmp_path / "e.jsonl").read_text().splitlines()
        assert len(lines) == 1 and json.loads(lines[0])["format_version"] == 1

    def test_line_layout(self, tmp_path):
        path, _ = _single_scene(tmp_path, n=3)
        kinds = [next(iter(json.loads(line))) for line in path.read_text().splitlines()[1:]]
        assert kinds == ["box", "det"] * 3

    def test_version_gate(self, tmp_path):
        path, _ = _single_scene(tmp_path, n=2)
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        header["format_version"] = 2
        path.write_text("\n".join([json.dumps(header)] + lines[1:]) + "\n")
        with pytest.raises(UnsupportedVersion):
            cli.read_scenes(path)

    def test_version_gate_exit_code(self, tmp_path, capsys):
        path, _ = _single_scene(tmp_path, n=2)
        path.write_text(path.read_text().replace('"format_version":1', '"format_version":2', 1))
        assert cli.run(["mine", "--scenes", str(path), "--out", str(tmp_path / "r.json")]) != 0
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "UnsupportedVersion"

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n")
        assert cli.run(["mine", "--scenes", str(path), "--out", str(tmp_path / "r.json")]) == 1


class TestMine:
    def test_zero_noise(self, tmp_path):
        path, sample = _single_scene(tmp_path, n=12, noise=NoiseModel.noiseless(sigma_fidelity=0.5))
        cli.cmd_mine(path, cli.RunConfig(), tmp_path / "r.json")
        scene = json.loads((tmp_path / "r.json").read_text())["scenes"][0]
        assert scene["labels_3d"] == list(range(12)) and scene["fallback"] is False
        assert all(len(h) == 9 for h in scene["homographies"])
        assert all(abs(np.linalg.norm(h) - 1) < 1e-12 for h in scene["homographies"])

    def test_single_detection_falls_back(self, tmp_path):
        path, sample = _single_scene(tmp_path, n=1, noise=NoiseModel.noiseless(sigma_fidelity=0.5))
        cli.cmd_mine(path, cli.RunConfig(), tmp_path / "r.json")
        scene = json.loads((tmp_path / "r.json").read_text())["scenes"][0]
        assert scene["fallback"] is True and scene["iterations_used"] == 0
        assert scene["labels_3d"] == [0]

    def test_byte_identical(self, tmp_path):
        path, _ = _single_scene(tmp_path, n=20)
        cli.cmd_mine(path, cli.RunConfig(), tmp_path / "a.json")
        cli.cmd_mine(path, cli.RunConfig(), tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path, monkeypatch):
        cli.cmd_generate(cli.RunConfig(n_scenes=6), tmp_path / "s.jsonl")
        monkeypatch.setenv("BEVMINE_THREADS", "1")
        cli.cmd_mine(tmp_path / "s.jsonl", cli.RunConfig(), tmp_path / "one.json")
        monkeypatch.setenv("BEVMINE_THREADS", "4")
        cli.cmd_mine(tmp_path / "s.jsonl", cli.RunConfig(), tmp_path / "four.json")
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "four.json").read_bytes()

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("BEVMINE_THREADS", "zero")
        with pytest.raises(InvalidConfig):
            cli.worker_count()

    def test_per_scene_errors_are_recorded(self, tmp_path, monkeypatch):
        cli.cmd_generate(cli.RunConfig(n_scenes=3), tmp_path / "s.jsonl")
        real = cli.decoupled_generate

        def flaky(dets, rig, cfg):
            if len(dets) and dets[0].depth == first_depth:
                raise DegenerateConfiguration("synthetic failure")
            return real(dets, rig, cfg)

        first_depth = cli.read_scenes(tmp_path / "s.jsonl")[1].detections[0].depth
        monkeypatch.setattr(cli, "decoupled_generate", flaky)
        cli.cmd_mine(tmp_path / "s.jsonl", cli.RunConfig(), tmp_path / "r.json")
        scenes = json.loads((tmp_path / "r.json").read_text())["scenes"]
        assert [s["error"] is None for s in scenes] == [True, False, True]
        assert scenes[1]["error"]["type"] == "DegenerateConfiguration"
        assert scenes[1]["labels_3d"] == []


class TestEval:
    def _pair(self, tmp_path, n=10):
        path, sample = _single_scene(tmp_path, n=n)
        cli.cmd_mine(path, cli.RunConfig(), tmp_path / "r.json")
        return path, tmp_path / "r.json"

    def test_happy_path(self, tmp_path):
        scene, report = self._pair(tmp_path)
        cli.cmd_eval(scene, report, tmp_path / "m.csv", cli.RunConfig())
        rows = {r["metric"]: r for r in _csv_rows(tmp_path / "m.csv")}
        assert {"precision", "recall", "mean_loc_err"} <= set(rows)
        assert 0 <= float(rows["precision"]["value"]) <= 1
        assert int(rows["mean_loc_err"]["n"]) == 10

    def test_index_out_of_range(self, tmp_path, capsys):
        scene, report = self._pair(tmp_path)
        doc = json.loads(report.read_text())
        doc["scenes"][0]["labels_3d"].append(99)
        report.write_text(json.dumps(doc))
        with pytest.raises(MismatchedInputs):
            cli.cmd_eval(scene, report, tmp_path / "m.csv", cli.RunConfig())
        code = cli.run(["eval", "--scenes", str(scene), "--report", str(report), "--out", str(tmp_path / "m.csv")])
        assert code == 1
        assert json.loads(capsys.readouterr().err)["error"]["type"] == "MismatchedInputs"

    def test_scene_count_mismatch(self, tmp_path):
        scene, report = self._pair(tmp_path)
        doc = json.loads(report.read_text())
        doc["scenes"] = doc["scenes"] * 2
        report.write_text(json.dumps(doc))
        with pytest.raises(MismatchedInputs):
            cli.cmd_eval(scene, report, tmp_path / "m.csv", cli.RunConfig())

    def test_empty_scene(self, tmp_path):
        cfg = cli.RunConfig(scene=SceneSpec(n_objects=0), n_scenes=1)
        cli.cmd_generate(cfg, tmp_path / "e.jsonl")
        cli.cmd_mine(tmp_path / "e.jsonl", cfg, tmp_path / "r.json")
        cli.cmd_eval(tmp_path / "e.jsonl", tmp_path / "r.json", tmp_path / "m.csv", cfg)
        rows = {r["metric"]: r for r in _csv_rows(tmp_path / "m.csv")}
        assert rows["precision"]["value"] == "1" and rows["precision"]["n"] == "0"
        assert rows["recall"]["value"] == "1" and rows["recall"]["n"] == "0"
        assert rows["mean_loc_err"]["value"] == "0" and rows["mean_loc_err"]["n"] == "0"


class TestDgp:
    def test_two_summary_rows(self, tmp_path):
        cfg = cli.config_from_dict({"dgp": {"seeds": [0], "projection": "both", "steps": 40}})
        rows = cli.cmd_dgp(cfg, tmp_path / "t.csv")
        assert len(rows) == 2
        assert len(_csv_rows(tmp_path / "t_summary.csv")) == 2
        assert len(_csv_rows(tmp_path / "t.csv")) == 80

    def test_summary_matches_trace(self, tmp_path):
        cfg = cli.config_from_dict({"dgp": {"seeds": [1, 2], "projection": "off", "steps": 60}})
        cli.cmd_dgp(cfg, tmp_path / "t.csv", tmp_path / "s.csv")
        trace = _csv_rows(tmp_path / "t.csv")
        for row in _csv_rows(tmp_path / "s.csv"):
            steps = [t for t in trace if t["seed"] == row["seed"] and t["projection"] == row["projection"]]
            for a, b in CONFLICT_PAIRS:
                frac = np.mean([float(t[f"cos_{a}_{b}"]) < 0 for t in steps])
                assert float(row[f"conflict_{a}_{b}"]) == frac

    def test_deterministic(self, tmp_path):
        cfg = cli.config_from_dict({"dgp": {"seeds": [3], "steps": 30}})
        cli.cmd_dgp(cfg, tmp_path / "a.csv")
        cli.cmd_dgp(cfg, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_projection(self):
        with pytest.raises(InvalidConfig):
            cli.config_from_dict({"dgp": {"projection": "sometimes"}})


class TestConfig:
    def test_defaults(self):
        cfg = cli.load_config(None)
        assert (cfg.mining.theta_c, cfg.mining.theta_u, cfg.mining.theta_h, cfg.mining.t_max) == (0.4, 0.1, 2.0, 10)
        assert cfg.mining.background_score == 0.2
        assert cfg.selection_threshold == 1.0

    def test_yaml_and_flags(self, tmp_path):
        path = _write_config(
            tmp_path,
            "seed: 5\nmining:\n  theta_h: 3.0\nscene:\n  n_objects: 4\n  x_range: [6, 30]\nrig:\n  height: 1.8\n  pitch: 0.05\n",
        )
        args = cli.build_parser().parse_args(["generate", "--config", path, "--out", "x", "--theta-u", "0.2", "--seed", "9"])
        cfg = cli.apply_overrides(cli.load_config(path), args)
        assert cfg.mining.theta_h == 3.0 and cfg.mining.theta_u == 0.2 and cfg.seed == 9
        assert cfg.scene.x_range == (6.0, 30.0)
        assert cfg.scene.rig.center[2] == pytest.approx(1.8)

    @pytest.mark.parametrize(
        "text",
        ["mining:\n  theta_x: 1\n", "bogus: 1\n", "mining:\n  theta_h: -1\n", "- a\n- b\n", "scene: [1, 2\n"],
    )
    def test_invalid(self, tmp_path, text):
        with pytest.raises(InvalidConfig):
            cli.load_config(_write_config(tmp_path, text))

    def test_invalid_exit(self, tmp_path, capsys):
        path = _write_config(tmp_path, "bogus: 1\n")
        assert cli.run(["dgp", "--config", path, "--out", str(tmp_path / "t.csv")]) == 1
        assert json.loads(capsys.readouterr().err)["error"]["type"] == "InvalidConfig"

    def test_missing_config(self, tmp_path, capsys):
        assert cli.run(["generate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "s")]) == 1
        assert json.loads(capsys.readouterr().err)["error"]["type"] == "IoError"


def test_pipeline_outputs(tmp_path):
    path = _write_config(tmp_path, "n_scenes: 2\ndgp:\n  seeds: [0]\n  steps: 20\n")
    assert cli.run(["pipeline", "--config", path, "--out-dir", str(tmp_path / "out")]) == 0
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == ["dgp_summary.csv", "dgp_trace.csv", "metrics.csv", "mining_report.json", "scenes.jsonl"]
