"""Configuration parsing, checkpoint format, and the command-line interface."""

import logging
import subprocess
import sys

import numpy as np
import pytest

from rydberg_vmc import LatticeSpec, build_hamiltonian
from rydberg_vmc.checkpoint import (
    CheckpointError,
    apply_blocks,
    load_checkpoint,
    restore_model,
    save_checkpoint,
)
from rydberg_vmc.cli import main
from rydberg_vmc.optim import AdamState
from rydberg_vmc.runconfig import ConfigError, RunConfig, format_config, parse_config
from rydberg_vmc.vmc import TrainState
from rydberg_vmc.wavefunction import init_model
from conftest import make_model

BASE = """
[lattice]
rows = 2
cols = 2

[model]
kind = patched_rnn
d_hidden = 8
patch_rows = 2
patch_cols = 2

[training]
iterations = 3
n_samples = 16
mini_batch = 8
seed = 9
"""


class TestParseConfig:
    def test_defaults_applied_and_logged(self, caplog):
        text = "[lattice]\nrows = 4\ncols = 4\n"
        with caplog.at_level(logging.INFO, logger="rydberg_vmc.config"):
            run = parse_config(text)
        assert (run.d_hidden, run.n_cells, run.n_heads) == (128, 2, 8)
        assert (run.d_ff, run.n_samples, run.mini_batch) == (2048, 512, 256)
        assert run.learning_rate == 0.0005
        assert run.kind == "rnn"
        logged = "\n".join(r.message for r in caplog.records)
        assert "d_hidden" in logged and "128" in logged

    def test_divisibility_error(self):
        text = "[lattice]\nrows = 8\ncols = 8\n[model]\npatch_rows = 3\npatch_cols = 3\nkind = patched_rnn\n"
        with pytest.raises(ConfigError, match="divisible"):
            parse_config(text)

    def test_duplicate_key(self):
        text = "[lattice]\nrows = 4\nrows = 2\ncols = 4\n"
        with pytest.raises(ConfigError, match="duplicate key 'rows'"):
            parse_config(text)

    def test_unknown_key_and_section(self):
        with pytest.raises(ConfigError, match="unknown key 'row'"):
            parse_config("[lattice]\nrow = 4\ncols = 4\n")
        with pytest.raises(ConfigError, match=r"unknown section \[latice\]"):
            parse_config("[latice]\nrows = 4\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required key 'cols'"):
            parse_config("[lattice]\nrows = 4\n")

    def test_type_error_contains_context(self):
        with pytest.raises(ConfigError, match=r"\[lattice\] rows"):
            parse_config("[lattice]\nrows = four\ncols = 4\n")

    def test_round_trip_identity(self):
        run = parse_config(BASE)
        assert parse_config(format_config(run)) == run
        # also with non-default floats
        text = BASE + "\n[hamiltonian]\nomega = 1.0\ndelta = 1.35\nrb = 1.2\n"
        run2 = parse_config(text)
        assert parse_config(format_config(run2)) == run2

    def test_mini_batch_invariant_checked(self):
        text = "[lattice]\nrows = 2\ncols = 2\n[training]\nn_samples = 10\nmini_batch = 4\n"
        with pytest.raises(ConfigError):
            parse_config(text)


class TestCheckpoint:
    def make_setup(self, tmp_path):
        run = parse_config(BASE)
        model = init_model(run.model_config())
        state = TrainState(
            adam=AdamState(model.params), rng=np.random.default_rng([run.seed, 1])
        )
        path = tmp_path / "model.ckpt"
        return run, model, state, path

    def test_round_trip_bit_identical(self, tmp_path):
        run, model, state, path = self.make_setup(tmp_path)
        state.adam.t = 7
        state.adam.m["head.w2"][...] = 0.25
        state.rng.random(100)  # advance the stream
        save_checkpoint(path, run, model, state)
        run2, model2, state2 = restore_model(path)
        assert run2 == run
        for name in model.params:
            assert model.params[name].value.tobytes() == model2.params[name].value.tobytes()
        assert state2.adam.t == 7
        assert np.array_equal(state2.adam.m["head.w2"], state.adam.m["head.w2"])
        # restored stream continues identically
        assert np.array_equal(state.rng.random(5), state2.rng.random(5))

    def test_truncated_file_fails_checksum(self, tmp_path):
        run, model, state, path = self.make_setup(tmp_path)
        save_checkpoint(path, run, model, state)
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_corrupt_payload_fails_checksum(self, tmp_path):
        run, model, state, path = self.make_setup(tmp_path)
        save_checkpoint(path, run, model, state)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_version_mismatch_rejected(self, tmp_path):
        import hashlib
        import struct

        run, model, state, path = self.make_setup(tmp_path)
        save_checkpoint(path, run, model, state)
        blob = bytearray(path.read_bytes()[:-32])
        blob[8:12] = struct.pack("<I", 99)
        blob = bytes(blob)
        path.write_bytes(blob + hashlib.sha256(blob).digest())
        with pytest.raises(CheckpointError, match="version 99"):
            load_checkpoint(path)

    def test_shape_mismatch_on_apply(self, tmp_path):
        run, model, state, path = self.make_setup(tmp_path)
        save_checkpoint(path, run, model, state)
        _, blocks, *_ = load_checkpoint(path)
        wrong = make_model("patched_rnn", patch=(2, 2), d_hidden=16)
        with pytest.raises(CheckpointError, match="shape"):
            apply_blocks(wrong, blocks)
        with pytest.raises(CheckpointError, match="blocks"):
            apply_blocks(make_model("patched_tf", patch=(2, 2)), blocks)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"short")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(BASE)
    return path


def run_cli(args, capsys):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCli:
    def test_count_params_rnn_defaults(self, tmp_path, capsys):
        path = tmp_path / "run.ini"
        path.write_text("[lattice]\nrows = 4\ncols = 4\n")
        code, out, err = run_cli(["count-params", "--config", path], capsys)
        assert code == 0
        assert out.strip() == "67074"

    def test_enumerate_check_near_one(self, config_file, capsys):
        code, out, err = run_cli(["enumerate-check", "--config", config_file], capsys)
        assert code == 0
        value = float(out.strip().split("=")[1])
        assert abs(value - 1.0) < 1e-6

    def test_train_writes_outputs_then_sample_energy(self, config_file, tmp_path, capsys):
        out_dir = tmp_path / "run1"
        code, out, err = run_cli(
            ["train", "--config", config_file, "--out-dir", out_dir], capsys
        )
        assert code == 0, err
        metrics = (out_dir / "metrics.csv").read_text().strip().splitlines()
        assert metrics[0].startswith("iteration,")
        assert len(metrics) == 4
        ckpt = out_dir / "model.ckpt"
        assert ckpt.exists()

        code, out, err = run_cli(["sample", "--checkpoint", ckpt], capsys)
        assert code == 0
        rows = [line.split() for line in out.strip().splitlines()]
        assert len(rows) == 16 and all(len(r) == 4 for r in rows)
        assert set("".join("".join(r) for r in rows)) <= {"0", "1"}

        code, out, err = run_cli(["energy", "--checkpoint", ckpt], capsys)
        assert code == 0
        assert "energy_mean=" in out and "n_samples=16" in out

    def test_ed_compare_untrained_nonnegative_gap(self, config_file, capsys):
        code, out, err = run_cli(["ed-compare", "--config", config_file], capsys)
        assert code == 0
        fields = dict(tok.split("=") for tok in out.split())
        gap = float(fields["energy_mean"]) - float(fields["e0"])
        stderr3 = 3.0 * float(fields["energy_stderr"])
        assert gap >= -stderr3  # variational bound up to sampling error
        assert 0.0 <= float(fields["fidelity"]) <= 1.0

    def test_ed_compare_delta_sweep_trains_per_point(self, config_file, capsys):
        code, out, err = run_cli(
            ["ed-compare", "--config", config_file, "--deltas", "0.5,2.0"], capsys
        )
        assert code == 0, err
        lines = out.strip().splitlines()
        assert len(lines) == 2
        rows = [dict(tok.split("=") for tok in line.split()) for line in lines]
        assert [float(r["delta"]) for r in rows] == [0.5, 2.0]
        for r in rows:
            assert float(r["abs_gap"]) >= 0.0
            assert 0.0 <= float(r["stag_model"]) <= 0.5

    def test_ed_compare_bad_deltas(self, config_file, capsys):
        code, out, err = run_cli(
            ["ed-compare", "--config", config_file, "--deltas", "a,b"], capsys
        )
        assert code == 2
        assert err.startswith("usage-error:")

    def test_seed_override_changes_run(self, config_file, tmp_path, capsys):
        d1, d2, d3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        for d, seed in ((d1, None), (d2, 123), (d3, 123)):
            args = ["train", "--config", config_file, "--out-dir", d]
            if seed is not None:
                args += ["--seed", seed]
            assert run_cli(args, capsys)[0] == 0

        def rows(d):
            return [
                line.split(",")[1]
                for line in (d / "metrics.csv").read_text().strip().splitlines()[1:]
            ]

        assert rows(d2) == rows(d3)
        assert rows(d1) != rows(d2)

    def test_error_classes(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[lattice]\nrows = 4\n")
        code, out, err = run_cli(["count-params", "--config", bad], capsys)
        assert code == 2
        assert err.startswith("config-error:")

        code, out, err = run_cli(["sample", "--config", bad], capsys)
        assert code == 2
        assert err.startswith("usage-error:")

        missing = tmp_path / "nope.ckpt"
        missing.write_bytes(b"not a checkpoint at all" * 4)
        code, out, err = run_cli(["energy", "--checkpoint", missing], capsys)
        assert code == 3
        assert err.startswith("checkpoint-error:")

        big = tmp_path / "big.ini"
        big.write_text("[lattice]\nrows = 6\ncols = 6\n")
        code, out, err = run_cli(["ed-compare", "--config", big], capsys)
        assert code == 4
        assert err.startswith("oracle-error:")

    def test_console_entry_point(self, config_file):
        result = subprocess.run(
            [sys.executable, "-m", "rydberg_vmc.cli", "count-params", "--config", str(config_file)],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0


class TestDeterministicRuns:
    def test_identical_metrics_and_checkpoints(self, config_file, tmp_path, capsys):
        dirs = [tmp_path / "r1", tmp_path / "r2"]
        for d in dirs:
            code, _, err = run_cli(
                ["train", "--config", config_file, "--out-dir", d, "--deterministic", "true"],
                capsys,
            )
            assert code == 0, err

        def stripped_rows(d):
            lines = (d / "metrics.csv").read_text().strip().splitlines()
            # drop the wall-clock column (index 4)
            return [
                ",".join(v for i, v in enumerate(line.split(",")) if i != 4)
                for line in lines
            ]

        assert stripped_rows(dirs[0]) == stripped_rows(dirs[1])
        assert (dirs[0] / "model.ckpt").read_bytes() == (dirs[1] / "model.ckpt").read_bytes()
