import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import torch
from torch import nn

from nncov_export import ExportError, ExportSpec, export, select_modules


def run_nncov(*argv):
    """Drive the analysis toolkit through its CLI, its external interface."""
    return subprocess.run(
        [sys.executable, "-m", "nncov.cli", *map(str, argv)],
        capture_output=True,
        text=True,
    )


def small_mlp(seed=0):
    torch.manual_seed(seed)
    return nn.Sequential(
        nn.Linear(6, 8), nn.ReLU(), nn.Linear(8, 5), nn.ReLU(), nn.Linear(5, 3)
    )


def read_tree(root: Path) -> dict[str, bytes]:
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


class TestExport:
    def test_manifest_and_payload_shapes(self, tmp_path):
        spec = ExportSpec(model=small_mlp(), out=tmp_path / "t", n=12,
                          input_shape=(6,), seed=3)
        export(spec)
        manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
        assert manifest["num_inputs"] == 12
        assert manifest["dtype"] == "f32" and manifest["endianness"] == "little"
        assert [l["neurons"] for l in manifest["layers"]] == [8, 5]
        assert manifest["has_predictions"] is True
        assert "[reduce=mean]" in manifest["model"]
        for entry in manifest["layers"]:
            raw = (tmp_path / "t" / "layers" / f"{entry['name']}.f32").read_bytes()
            assert len(raw) == 12 * entry["neurons"] * 4

    def test_predictions_are_argmax_of_logits(self, tmp_path):
        model = small_mlp(seed=1)
        spec = ExportSpec(model=model, out=tmp_path / "t", n=10, input_shape=(6,), seed=2)
        export(spec)
        generator = torch.Generator().manual_seed(2)
        inputs = torch.randn((10, 6), generator=generator)
        with torch.no_grad():
            expected = model(inputs).argmax(dim=1).numpy()
        raw = np.frombuffer((tmp_path / "t" / "predictions.i64").read_bytes(), dtype="<i8")
        np.testing.assert_array_equal(raw, expected)

    def test_named_layer_selection(self, tmp_path):
        spec = ExportSpec(model=small_mlp(), out=tmp_path / "t", n=4,
                          input_shape=(6,), layers="1")
        export(spec)
        manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
        assert [l["name"] for l in manifest["layers"]] == ["1"]

    def test_unknown_layer_name_rejected(self, tmp_path):
        spec = ExportSpec(model=small_mlp(), out=tmp_path / "t", n=4,
                          input_shape=(6,), layers="nope")
        with pytest.raises(ExportError, match="unknown layer"):
            export(spec)

    def test_refuses_non_empty_directory(self, tmp_path):
        target = tmp_path / "t"
        target.mkdir()
        (target / "junk").write_text("x")
        with pytest.raises(ExportError, match="non-empty"):
            export(ExportSpec(model=small_mlp(), out=target, n=4, input_shape=(6,)))

    def test_model_without_activations_rejected(self, tmp_path):
        model = nn.Sequential(nn.Linear(4, 2))
        with pytest.raises(ExportError, match="no activation"):
            export(ExportSpec(model=model, out=tmp_path / "t", n=4, input_shape=(4,)))


class TestSpatialReduction:
    def conv_model(self, seed=5):
        torch.manual_seed(seed)
        return nn.Sequential(nn.Conv2d(1, 3, kernel_size=3), nn.ReLU())

    def test_mean_and_max_share_widths_but_not_payloads(self, tmp_path):
        payloads = {}
        for reduce in ("mean", "max"):
            model = self.conv_model()
            spec = ExportSpec(model=model, out=tmp_path / reduce, n=6,
                              input_shape=(1, 8, 8), reduce=reduce, seed=6)
            export(spec)
            manifest = json.loads((tmp_path / reduce / "manifest.json").read_text())
            assert [l["neurons"] for l in manifest["layers"]] == [3]
            assert f"[reduce={reduce}]" in manifest["model"]
            payloads[reduce] = (tmp_path / reduce / "layers" / "1.f32").read_bytes()
        assert payloads["mean"] != payloads["max"]

    def test_reduction_matches_hand_reduced_reference(self, tmp_path):
        model = self.conv_model()
        spec = ExportSpec(model=model, out=tmp_path / "t", n=6,
                          input_shape=(1, 8, 8), reduce="max", seed=6)
        export(spec)
        generator = torch.Generator().manual_seed(6)
        inputs = torch.randn((6, 1, 8, 8), generator=generator)
        with torch.no_grad():
            reference = model(inputs)  # the ReLU is the last module
        expected = reference.amax(dim=(2, 3)).numpy().astype("<f4")
        raw = np.frombuffer(
            (tmp_path / "t" / "layers" / "1.f32").read_bytes(), dtype="<f4"
        ).reshape(6, 3)
        np.testing.assert_array_equal(raw, expected)


class TestDeterminism:
    def test_reexport_is_byte_identical(self, tmp_path):
        trees = []
        for run in ("a", "b"):
            export(ExportSpec(model="demo-mlp", out=tmp_path / run, n=16,
                              input_shape=(6,), seed=9))
            trees.append(read_tree(tmp_path / run))
        assert trees[0] == trees[1]

    def test_npz_dataset_with_labels(self, tmp_path):
        rng = np.random.default_rng(4)
        path = tmp_path / "data.npz"
        np.savez(path, inputs=rng.normal(size=(8, 6)).astype(np.float32),
                 labels=rng.integers(0, 3, size=8))
        spec = ExportSpec(model=small_mlp(), out=tmp_path / "t", n=8,
                          input_shape=(6,), dataset=str(path))
        export(spec)
        manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
        assert manifest["has_labels"] is True
        assert (tmp_path / "t" / "labels.i64").stat().st_size == 8 * 8


class TestPrimaryInterface:
    def test_acceptance_roundtrip_through_analysis_cli(self, tmp_path):
        """Exported traces must validate and score in the analysis toolkit."""
        export(ExportSpec(model="demo-mlp", out=tmp_path / "t", n=16,
                          input_shape=(6,), seed=1))
        result = run_nncov("compute", "--trace", tmp_path / "t",
                           "--criterion", "nlc", "--out", tmp_path / "res")
        passed = result.returncode == 0 and result.stderr.strip() == ""
        value = None
        if passed:
            value = json.loads((tmp_path / "res" / "result.json").read_text())["value"]
            passed = value > 0
        print(f"[{'PASS' if passed else 'FAIL'}] acceptance 10: exported trace "
              f"validates with zero warnings and scores (value {value})")
        assert passed, result.stderr

    def test_incremental_criterion_also_runs(self, tmp_path):
        export(ExportSpec(model="demo-conv", out=tmp_path / "t", n=12,
                          input_shape=(1, 8, 8), seed=2))
        result = run_nncov("compute", "--trace", tmp_path / "t", "--criterion",
                           "nlc-inc", "--batch-size", 4, "--out", tmp_path / "res")
        assert result.returncode == 0, result.stderr


class TestCli:
    def test_cli_export_and_errors(self, tmp_path, capsys):
        from nncov_export.cli import main

        assert main(["export", "--model", "demo-mlp", "--n", "8",
                     "--input-shape", "6", "--out", str(tmp_path / "t")]) == 0
        # second run into the same directory must refuse
        assert main(["export", "--model", "demo-mlp", "--n", "8",
                     "--input-shape", "6", "--out", str(tmp_path / "t")]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ExportError"
