"""The command-line workflow end to end.

Writes a config file, trains, then runs every read-only subcommand against
the resulting checkpoint. Uses subprocesses exactly as a shell user would.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

CONFIG = """\
[lattice]
rows = 2
cols = 2

[model]
kind = patched_rnn
d_hidden = 16
patch_rows = 2
patch_cols = 2

[training]
iterations = 600
n_samples = 64
mini_batch = 32
learning_rate = 0.002
seed = 11
"""


def run(*args):
    cmd = [sys.executable, "-m", "rydberg_vmc.cli", *map(str, args)]
    print(f"$ rydberg-vmc {' '.join(map(str, args))}")
    proc = subprocess.run(cmd, capture_output=True, text=True)
    out = proc.stdout.strip()
    print("\n".join("  " + line for line in out.splitlines()[:6]) or "  (no output)")
    if proc.returncode != 0:
        print(f"  stderr: {proc.stderr.strip()}")
    print()
    return out


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    config = tmp / "run.ini"
    config.write_text(CONFIG)
    out_dir = tmp / "out"

    run("count-params", "--config", config)
    run("train", "--config", config, "--out-dir", out_dir, "--deterministic", "true")
    ckpt = out_dir / "model.ckpt"
    run("energy", "--checkpoint", ckpt)
    run("ed-compare", "--checkpoint", ckpt)
    run("enumerate-check", "--checkpoint", ckpt)
    samples = run("sample", "--checkpoint", ckpt)
    print(f"metrics file rows: {len((out_dir / 'metrics.csv').read_text().splitlines())}")
