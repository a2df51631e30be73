"""CLI subcommands: exit codes, outputs, determinism."""

import filecmp
import json
from pathlib import Path

import pytest

from segdrift.cli import main
from segdrift.worldgen import world_from_file


def small_config(tmp_path, **overrides):
    cfg = {
        "world": {"corridor_length": 12, "door_spacing": 2},
        "drift": {"scale_sigma": 1e-3},
        "observation": {"detect_prob": 0.9, "endpoint_noise_sigma": 0.005},
        "modes": ["baseline", "seg"],
        "seeds": [0, 1],
        "out_dir": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


class TestGenWorld:
    def test_default_flags_writes_reparseable_world(self, tmp_path, capsys):
        out = tmp_path / "world.json"
        assert main(["gen-world", "--out", str(out)]) == 0
        world = world_from_file(out)
        assert len(world.segments) > 0
        assert "segments" in capsys.readouterr().out

    def test_invalid_spec_exits_1_names_constraint(self, tmp_path, capsys):
        out = tmp_path / "world.json"
        code = main([
            "gen-world", "--corridor-length", "2", "--door-spacing", "5", "--out", str(out)
        ])
        assert code == 1
        assert "door_spacing" in capsys.readouterr().err

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["gen-world", "--seed", "7", "--out", str(a)]) == 0
        assert main(["gen-world", "--seed", "7", "--out", str(b)]) == 0
        assert filecmp.cmp(a, b, shallow=False)
        assert a.read_bytes() == b.read_bytes()

    def test_missing_out_flag_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gen-world"])
        assert exc.value.code == 1


class TestRun:
    def test_writes_expected_tree(self, tmp_path, capsys):
        cfg = small_config(tmp_path)
        assert main(["run", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        for mode in ("baseline", "seg"):
            for seed in (0, 1):
                cell = out / mode / f"seed{seed}"
                for name in ("raw.tum", "corrected.tum", "gt.tum",
                             "manifest.json", "metrics.json", "metrics.csv"):
                    assert (cell / name).is_file(), f"missing {cell / name}"
        assert (out / "aggregate.csv").is_file()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["errors"] == []
        assert 0.0 <= summary["modes"]["seg"]["win_rate_vs_baseline"] <= 1.0

    def test_zero_drift_baseline_ate_zero(self, tmp_path, capsys):
        cfg = small_config(
            tmp_path, drift={}, observation={}, modes=["baseline"], seeds=[3]
        )
        assert main(["run", "--config", str(cfg)]) == 0
        metrics = json.loads(
            (tmp_path / "out" / "baseline" / "seed3" / "metrics.json").read_text()
        )
        assert metrics["ate_rmse"] < 1e-9

    def test_rerun_byte_identical_tree(self, tmp_path):
        cfg = small_config(tmp_path)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "run1")]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "run2")]) == 0
        t1, t2 = tree_bytes(tmp_path / "run1"), tree_bytes(tmp_path / "run2")
        assert t1.keys() == t2.keys()
        mismatched = [k for k in t1 if t1[k] != t2[k]]
        assert mismatched == []

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_config_without_seeds_exits_1(self, tmp_path, capsys):
        cfg = small_config(tmp_path, seeds=[])
        assert main(["run", "--config", str(cfg)]) == 1
        assert "seed" in capsys.readouterr().err

    def test_unknown_mode_exits_1(self, tmp_path, capsys):
        cfg = small_config(tmp_path, modes=["baseline", "warp"])
        assert main(["run", "--config", str(cfg)]) == 1
        assert "warp" in capsys.readouterr().err

    def test_world_file_input(self, tmp_path, capsys):
        world_path = tmp_path / "world.json"
        assert main([
            "gen-world", "--corridor-length", "10", "--out", str(world_path)
        ]) == 0
        cfg = small_config(tmp_path, world_file=str(world_path), seeds=[0])
        del_cfg = json.loads(cfg.read_text())
        del_cfg.pop("world")
        cfg.write_text(json.dumps(del_cfg))
        assert main(["run", "--config", str(cfg)]) == 0


class TestEval:
    def run_small(self, tmp_path):
        cfg = small_config(tmp_path, modes=["baseline"], seeds=[0])
        assert main(["run", "--config", str(cfg)]) == 0
        cell = tmp_path / "out" / "baseline" / "seed0"
        return cell / "corrected.tum", cell / "gt.tum"

    def test_eval_matches_run_metrics(self, tmp_path, capsys):
        est, gt = self.run_small(tmp_path)
        run_metrics = json.loads((est.parent / "metrics.json").read_text())
        capsys.readouterr()
        assert main(["eval", str(est), str(gt)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ate_rmse"] == pytest.approx(run_metrics["ate_rmse"], rel=1e-6)

    def test_eval_writes_json_file(self, tmp_path, capsys):
        est, gt = self.run_small(tmp_path)
        out_path = tmp_path / "metrics.json"
        assert main(["eval", str(est), str(gt), "--out", str(out_path)]) == 0
        assert json.loads(out_path.read_text())["align_mode"] == "similarity"

    def test_eval_align_none(self, tmp_path, capsys):
        est, gt = self.run_small(tmp_path)
        capsys.readouterr()
        assert main(["eval", str(est), str(gt), "--align", "none"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["alignment"]["scale"] == 1.0

    def test_eval_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["eval", str(tmp_path / "a.tum"), str(tmp_path / "b.tum")]) == 2

    def test_eval_malformed_file_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.tum"
        bad.write_text("1 2 3\n")
        gt = tmp_path / "gt.tum"
        gt.write_text("0 0 0 0 0 0 0 1\n")
        assert main(["eval", str(bad), str(gt)]) == 1

    def test_eval_interpolate_gt(self, tmp_path, capsys):
        est, gt = self.run_small(tmp_path)
        capsys.readouterr()
        assert main(["eval", str(est), str(gt), "--interpolate-gt"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ate_rmse"] >= 0.0


class TestUsage:
    def test_no_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1

    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
