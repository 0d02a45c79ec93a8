"""Command-line entry point.

Subcommands::

    train            run variational training, writing metrics + checkpoints
    sample           emit configurations from a checkpoint as 0/1 rows
    energy           print the sampled energy estimate of a checkpoint
    ed-compare       compare a model against exact diagonalization
                     (optionally training one model per detuning on a grid)
    enumerate-check  print the summed |psi|^2 over the full basis
    count-params     print the exact trainable-parameter count

Every failure exits nonzero with a single machine-parsable stderr line of the
form ``<error-class>: <message>`` where the class is one of config-error,
checkpoint-error, oracle-error, training-fault, io-error, usage-error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import ed as ed_mod
from .checkpoint import CheckpointError, restore_model, save_checkpoint
from .optim import AdamState, TrainingFault
from .runconfig import ConfigError, RunConfig, format_config, parse_config
from .vmc import (
    TrainState,
    energy_estimate,
    local_energies_grouped,
    measure_observable,
    train,
)
from .wavefunction import init_model

__all__ = ["main"]


class UsageError(Exception):
    pass


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {raw!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydberg-vmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "sample", "energy", "ed-compare", "enumerate-check", "count-params"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="run configuration file")
        p.add_argument("--checkpoint", type=Path, help="checkpoint file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out-dir", type=Path, help="override the configured output directory")
        p.add_argument(
            "--deterministic",
            type=_parse_bool,
            default=False,
            help="pin BLAS to one thread for bit-reproducible runs (true/false)",
        )
        if name == "ed-compare":
            p.add_argument(
                "--deltas",
                help="comma-separated detuning grid; trains one model per value",
            )
    return parser


def _load_setup(args):
    """Resolve (run_config, model, state) from --config xor --checkpoint."""
    if args.config is not None and args.checkpoint is not None:
        raise UsageError("give either --config or --checkpoint, not both")
    if args.checkpoint is not None:
        run, model, state = restore_model(args.checkpoint)
        if args.seed is not None:
            raise UsageError("--seed cannot override a restored checkpoint stream")
    elif args.config is not None:
        run = _read_config(args)
        model = init_model(run.model_config())
        state = TrainState(
            adam=AdamState(model.params),
            rng=np.random.default_rng([run.seed, 1]),
        )
    else:
        raise UsageError("either --config or --checkpoint is required")
    return run, model, state


def _read_config(args) -> RunConfig:
    if args.config is None:
        raise UsageError("--config is required for this command")
    text = args.config.read_text()
    run = parse_config(text)
    if args.seed is not None:
        run = RunConfig(**{**run.__dict__, "seed": args.seed}).validate()
    return run


def _out_dir(run: RunConfig, args) -> Path:
    # --out-dir redirects files without entering the persisted config, so
    # checkpoints stay bit-identical across output locations
    path = Path(args.out_dir) if args.out_dir is not None else Path(run.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_train(args) -> int:
    run = _read_config(args)
    out = _out_dir(run, args)
    model = init_model(run.model_config())
    state = TrainState(
        adam=AdamState(model.params), rng=np.random.default_rng([run.seed, 1])
    )
    ckpt_path = out / run.checkpoint_file

    def checkpoint_fn(model_, state_, iteration):
        save_checkpoint(ckpt_path, run, model_, state_)

    with open(out / run.metrics_file, "w") as metrics:
        history, state = train(
            model,
            run.hamiltonian(),
            run.train_config(),
            metrics_sink=metrics,
            checkpoint_fn=checkpoint_fn,
            state=state,
        )
    (out / "config.ini").write_text(format_config(run))
    final = history[-1][1].mean if history else float("nan")
    print(f"iterations={run.iterations} final_energy={final!r} checkpoint={ckpt_path}")
    return 0


def _cmd_sample(args) -> int:
    if args.checkpoint is None:
        raise UsageError("sample requires --checkpoint")
    run, model, state = _load_setup(args)
    bits, _ = model.sample(run.n_samples, state.rng)
    np.savetxt(sys.stdout, bits, fmt="%d")
    return 0


def _cmd_energy(args) -> int:
    if args.checkpoint is None:
        raise UsageError("energy requires --checkpoint")
    run, model, state = _load_setup(args)
    samples, _ = model.sample(run.n_samples, state.rng)
    eloc = local_energies_grouped(model, samples, run.hamiltonian(), run.d_split or None)
    est = energy_estimate(eloc)
    print(
        f"energy_mean={est.mean!r} energy_var={est.variance!r} "
        f"energy_stderr={est.std_error!r} n_samples={est.n_samples}"
    )
    return 0


def _compare_line(run: RunConfig, model, state, delta: float) -> str:
    lattice = run.lattice()
    if lattice.n_atoms > ed_mod.MAX_ENUM_ATOMS:
        raise ed_mod.OracleSizeError(
            f"ed-compare needs N <= {ed_mod.MAX_ENUM_ATOMS} atoms, got {lattice.n_atoms}"
        )
    ham = RunConfig(**{**run.__dict__, "delta": delta}).hamiltonian()
    exact = ed_mod.ed_ground_state(lattice, ham)
    samples, _ = model.sample(run.n_samples, state.rng)
    est = energy_estimate(local_energies_grouped(model, samples, ham, run.d_split or None))
    fid = ed_mod.fidelity(model, exact)
    stag = measure_observable(model, run.n_samples, state.rng)
    stag_ed = ed_mod.ed_expectation(exact, "staggered_magnetization", lattice)
    return (
        f"delta={delta!r} energy_mean={est.mean!r} energy_stderr={est.std_error!r} "
        f"e0={exact.ground_energy!r} abs_gap={abs(est.mean - exact.ground_energy)!r} "
        f"fidelity={fid!r} stag_model={stag.mean!r} stag_stderr={stag.std_error!r} "
        f"stag_ed={stag_ed!r} stag_abs_diff={abs(stag.mean - stag_ed)!r}"
    )


def _cmd_ed_compare(args) -> int:
    if args.deltas is None:
        run, model, state = _load_setup(args)
        print(_compare_line(run, model, state, run.delta))
        return 0
    # Sweep mode: train one fresh model per detuning value.
    run = _read_config(args)
    try:
        deltas = [float(tok) for tok in args.deltas.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--deltas must be comma-separated floats, got {args.deltas!r}")
    if not deltas:
        raise UsageError("--deltas is empty")
    for delta in deltas:
        point = RunConfig(**{**run.__dict__, "delta": delta})
        model = init_model(point.model_config())
        state = TrainState(
            adam=AdamState(model.params), rng=np.random.default_rng([point.seed, 1])
        )
        _, state = train(model, point.hamiltonian(), point.train_config(), state=state)
        print(_compare_line(point, model, state, delta))
    return 0


def _cmd_enumerate_check(args) -> int:
    run, model, _ = _load_setup(args)
    print(f"normalization={ed_mod.enumerate_normalization(model)!r}")
    return 0


def _cmd_count_params(args) -> int:
    run, model, _ = _load_setup(args)
    print(model.count_parameters())
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "sample": _cmd_sample,
    "energy": _cmd_energy,
    "ed-compare": _cmd_ed_compare,
    "enumerate-check": _cmd_enumerate_check,
    "count-params": _cmd_count_params,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.deterministic:
            import threadpoolctl

            threadpoolctl.threadpool_limits(limits=1)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage-error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 2
    except CheckpointError as exc:
        print(f"checkpoint-error: {exc}", file=sys.stderr)
        return 3
    except ed_mod.OracleSizeError as exc:
        print(f"oracle-error: {exc}", file=sys.stderr)
        return 4
    except TrainingFault as exc:
        print(f"training-fault: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    raise SystemExit(main())
