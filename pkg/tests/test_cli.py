"""End-to-end CLI runs: exit codes, outputs, metadata, determinism."""

import io
import json
import math
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from vtvrestore import write_pgm
from vtvrestore.cli import main

from conftest import make_phantom


def run_cli(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


def parse_metrics(stdout):
    lines = [ln for ln in stdout.splitlines() if ln]
    assert lines[0] == "image,psnr_noisy,psnr_restored,iters,seconds"
    rows = []
    for line in lines[1:]:
        image, noisy, restored, iters, seconds = line.split(",")
        rows.append(
            {
                "image": image,
                "psnr_noisy": float(noisy),
                "psnr_restored": float(restored),
                "iters": int(iters),
                "seconds": float(seconds),
            }
        )
    return rows


@pytest.fixture(scope="module")
def phantom_pgm(tmp_path_factory):
    path = tmp_path_factory.mktemp("images") / "phantom.pgm"
    write_pgm(path, make_phantom(256))
    return str(path)


@pytest.fixture(scope="module")
def small_pgm(tmp_path_factory):
    path = tmp_path_factory.mktemp("images") / "small.pgm"
    write_pgm(path, make_phantom(64))
    return str(path)


@pytest.fixture(scope="module")
def denoise_run(phantom_pgm, tmp_path_factory):
    out = tmp_path_factory.mktemp("dn")
    code, stdout = run_cli(
        "denoise", "--input", phantom_pgm, "--out", str(out), "--seed", "7", "--trace"
    )
    return code, parse_metrics(stdout)[0], out


@pytest.fixture(scope="module")
def variant_psnrs(phantom_pgm, tmp_path_factory):
    results = {}
    for variant in ("reduced17", "full13"):
        out = tmp_path_factory.mktemp(variant)
        code, stdout = run_cli(
            "deblur", "--input", phantom_pgm, "--out", str(out),
            "--seed", "7", "--variant", variant,
        )
        assert code == 0
        results[variant] = parse_metrics(stdout)[0]["psnr_restored"]
    return results


class TestSelftest:
    def test_passes_on_fresh_build(self):
        code, out = run_cli("selftest")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 6
        assert all(line.startswith("PASS") for line in lines)

    def test_perturbed_bank_negative_control(self):
        code, out = run_cli("selftest", "--perturb-bank")
        assert code == 3
        assert any(line.startswith("FAIL uep-identity") for line in out.splitlines())


class TestDenoise:
    def test_default_run_meets_gain_corridor(self, denoise_run):
        code, row, out = denoise_run
        assert code == 0
        assert abs(row["psnr_noisy"] - 20.0) < 0.2
        assert row["psnr_restored"] - row["psnr_noisy"] >= 6.0
        assert row["iters"] <= 200
        for suffix in ("degraded.pgm", "restored.pgm", "trace.csv", "run.json"):
            assert (out / f"phantom_{suffix}").is_file()

    def test_metadata_contents(self, denoise_run):
        _, row, out = denoise_run
        meta = json.loads((out / "phantom_run.json").read_text())
        assert meta["task"] == "denoise"
        assert meta["variant"] == "reduced17"
        assert meta["lam"] == [2.0] + [1.5] * 8
        assert meta["gamma"] == [12.0] + [4.5] * 8
        assert meta["seed"] == 7
        assert meta["rng"] == "numpy-pcg64-standard-normal"
        assert meta["library_version"]
        assert meta["metrics"]["converged"] is True
        assert meta["metrics"]["iterations"] == row["iters"]

    def test_trace_csv_well_formed(self, denoise_run):
        _, row, out = denoise_run
        lines = (out / "phantom_trace.csv").read_text().splitlines()
        assert lines[0] == "iter,rel_err,energy"
        assert len(lines) == 1 + row["iters"]
        rels = [float(line.split(",")[1]) for line in lines[1:]]
        assert rels[-1] <= 5e-4

    def test_clean_constant_input_gives_inf_marker(self, tmp_path):
        const = tmp_path / "const.pgm"
        write_pgm(const, np.full((32, 32), 128.0))
        code, stdout = run_cli(
            "denoise", "--input", str(const), "--out", str(tmp_path / "o"),
            "--sigma", "0",
        )
        assert code == 0
        line = stdout.splitlines()[1]
        image, noisy, restored, iters, _ = line.split(",")
        assert noisy == "inf" and restored == "inf"
        assert int(iters) <= 2
        meta = json.loads((tmp_path / "o" / "const_run.json").read_text())
        assert meta["metrics"]["psnr_restored"] == "inf"

    def test_full13_variant_converges(self, phantom_pgm, tmp_path):
        code, stdout = run_cli(
            "denoise", "--input", phantom_pgm, "--out", str(tmp_path),
            "--variant", "full13", "--seed", "7",
        )
        assert code == 0
        row = parse_metrics(stdout)[0]
        assert row["iters"] <= 200

    def test_determinism_bit_identical_outputs(self, small_pgm, tmp_path):
        args = ("denoise", "--input", small_pgm, "--seed", "3", "--trace")
        code1, _ = run_cli(*args, "--out", str(tmp_path / "a"))
        code2, _ = run_cli(*args, "--out", str(tmp_path / "b"))
        assert code1 == code2 == 0
        for name in ("small_restored.pgm", "small_degraded.pgm", "small_trace.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_nonconvergence_exit_code(self, small_pgm, tmp_path):
        code, _ = run_cli(
            "denoise", "--input", small_pgm, "--out", str(tmp_path),
            "--max-iter", "1", "--seed", "0",
        )
        assert code == 2

    def test_dump_features_writes_nine_channels(self, small_pgm, tmp_path):
        code, _ = run_cli(
            "denoise", "--input", small_pgm, "--out", str(tmp_path),
            "--dump-features", "--seed", "0",
        )
        assert code == 0
        files = sorted(tmp_path.glob("small_feature_*.pgm"))
        assert len(files) == 9

    def test_batch_jobs_with_per_image_seeds(self, small_pgm, tmp_path):
        other = tmp_path / "copy.pgm"
        other.write_bytes(Path(small_pgm).read_bytes())
        code, stdout = run_cli(
            "denoise", "--input", small_pgm, str(other),
            "--out", str(tmp_path / "o"), "--jobs", "2", "--seed", "10",
        )
        assert code == 0
        assert len(parse_metrics(stdout)) == 2
        meta_a = json.loads((tmp_path / "o" / "small_run.json").read_text())
        meta_b = json.loads((tmp_path / "o" / "copy_run.json").read_text())
        assert meta_a["seed"] == 10 and meta_b["seed"] == 11


class TestDeblur:
    def test_identity_degradation_with_benign_weights_is_a_no_op(
        self, small_pgm, tmp_path
    ):
        # near-zero TV weights and a uniform splitting penalty leave an
        # undegraded image essentially untouched
        code, stdout = run_cli(
            "deblur", "--input", small_pgm, "--out", str(tmp_path),
            "--blur-len", "1", "--sigma", "0",
            "--lambda1", "0.004", "--lambda-rest", "0.002",
            "--gamma1", "0.4", "--gamma-rest", "0.4",
        )
        assert code == 0
        row = parse_metrics(stdout)[0]
        assert math.isinf(row["psnr_noisy"])  # degraded == input exactly
        assert math.isinf(row["psnr_restored"]) or row["psnr_restored"] >= 60.0

    @pytest.mark.xfail(
        strict=True,
        reason="the working-strength deblur defaults regularize on purpose; "
        "only near-zero TV weights would leave an undegraded image "
        "untouched, and those cannot meet the deblurring gain corridor",
    )
    def test_identity_degradation_with_default_weights_is_a_no_op(
        self, small_pgm, tmp_path
    ):
        code, stdout = run_cli(
            "deblur", "--input", small_pgm, "--out", str(tmp_path),
            "--blur-len", "1", "--sigma", "0",
        )
        assert code == 0
        row = parse_metrics(stdout)[0]
        assert math.isinf(row["psnr_restored"]) or row["psnr_restored"] >= 60.0

    def test_default_run_meets_gain_corridor(self, phantom_pgm, tmp_path):
        code, stdout = run_cli(
            "deblur", "--input", phantom_pgm, "--out", str(tmp_path), "--seed", "7"
        )
        assert code == 0
        row = parse_metrics(stdout)[0]
        assert row["psnr_restored"] - row["psnr_noisy"] >= 2.0

    def test_variants_agree_within_one_db(self, variant_psnrs):
        assert abs(variant_psnrs["full13"] - variant_psnrs["reduced17"]) < 1.0

    @pytest.mark.xfail(
        strict=True,
        reason="half-decibel parity between the variants would need a "
        "lambda-weighted u-update; with the exact normal equations they "
        "solve measurably different problems (~0.7 dB apart here)",
    )
    def test_variants_agree_within_half_db(self, variant_psnrs):
        assert abs(variant_psnrs["full13"] - variant_psnrs["reduced17"]) < 0.5


class TestInputVariants:
    def test_png_input_with_explicit_ref_and_iso_shrinkage(self, tmp_path):
        pytest.importorskip("PIL")
        from vtvrestore import write_image

        img = make_phantom(64)
        png = tmp_path / "scene.png"
        ref = tmp_path / "scene_ref.pgm"
        write_image(png, img)
        write_pgm(ref, img)
        code, stdout = run_cli(
            "denoise", "--input", str(png), "--ref", str(ref),
            "--out", str(tmp_path / "o"), "--seed", "2", "--shrinkage", "iso",
        )
        assert code == 0
        row = parse_metrics(stdout)[0]
        assert row["image"] == "scene"
        assert row["psnr_restored"] > row["psnr_noisy"]
        meta = json.loads((tmp_path / "o" / "scene_run.json").read_text())
        assert meta["ref"] == str(ref)
        assert meta["shrinkage"] == "iso"


class TestConfigAndErrors:
    def test_config_file_supplies_values_and_flags_win(self, small_pgm, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"sigma": 0.0, "max_iter": 150, "seed": 9}))
        code, _ = run_cli(
            "denoise", "--input", small_pgm, "--out", str(tmp_path / "o"),
            "--config", str(cfg_path), "--max-iter", "137",
        )
        assert code == 0
        meta = json.loads((tmp_path / "o" / "small_run.json").read_text())
        assert meta["sigma"] == 0.0  # from the config file
        assert meta["max_iter"] == 137  # flag wins over the file
        assert meta["seed"] == 9

    def test_unknown_config_key_is_an_error(self, small_pgm, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"sigmas": 1.0}))
        code, _ = run_cli(
            "denoise", "--input", small_pgm, "--out", str(tmp_path),
            "--config", str(cfg_path),
        )
        assert code == 1

    def test_missing_input_is_usage_error(self, tmp_path):
        code, _ = run_cli("denoise", "--out", str(tmp_path))
        assert code == 1
        code, _ = run_cli("denoise", "--input", str(tmp_path / "nope.pgm"))
        assert code == 1

    def test_even_blur_length_is_config_error(self, small_pgm, tmp_path):
        code, _ = run_cli(
            "deblur", "--input", small_pgm, "--out", str(tmp_path), "--blur-len", "8"
        )
        assert code == 1

    def test_ref_with_multiple_inputs_rejected(self, small_pgm, tmp_path):
        other = tmp_path / "c.pgm"
        other.write_bytes(Path(small_pgm).read_bytes())
        code, _ = run_cli(
            "denoise", "--input", small_pgm, str(other), "--ref", small_pgm,
            "--out", str(tmp_path),
        )
        assert code == 1


class TestCrossVariantParityLimits:
    """PSNR parity across u-update variants is out of reach at the stock
    full13 denoising weights: matching results would require a
    lambda-weighted u-update numerator, which the exact normal equations
    rule out.  Kept as strict xfails so any behavior change shows up.
    """

    @pytest.mark.xfail(
        strict=True,
        reason="the stock full13 denoise weights are ~10x too small to "
        "match the reduced17 result under the exact u-update",
    )
    def test_full13_denoise_lands_within_one_db_of_reduced17(
        self, denoise_run, phantom_pgm, tmp_path
    ):
        _, reduced_row, _ = denoise_run
        code, stdout = run_cli(
            "denoise", "--input", phantom_pgm, "--out", str(tmp_path),
            "--variant", "full13", "--seed", "7",
        )
        assert code == 0
        full_row = parse_metrics(stdout)[0]
        assert abs(full_row["psnr_restored"] - reduced_row["psnr_restored"]) < 1.0
