"""``sbe-wavelets`` command line.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dwt2d import DimensionError, SubbandSet, dwt2, idwt2
from .io import (
    FormatError,
    load_checkpoint,
    read_image,
    read_lwt1,
    rescale_to_u8,
    save_checkpoint,
    write_lwt1,
    write_metrics_csv,
    write_pgm,
    write_response_csv,
)
from .lattice import (
    NAMED_WAVELETS,
    ConfigurationError,
    ConvergenceError,
    FilterBank,
    InvariantError,
    fit_angles,
    lattice_to_filters,
    named_bank,
)
from .spectral import (
    SpectralGrid,
    highpass_stopband_energy,
    response_table,
    sbe_loss,
    stopband_energy_numeric,
)

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
SUBBAND_FILES = ("x_ll", "x_lh", "x_hl", "x_hh")


class UsageError(Exception):
    pass


def parse_radians(text: str) -> float:
    """``0.6pi``, ``pi``, or plain radians."""
    s = text.strip().lower().replace("π", "pi")
    if s.endswith("pi"):
        coef = s[:-2].rstrip("*")
        return (float(coef) if coef else 1.0) * math.pi
    return float(s)


def parse_floats(text: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return [float(p) for p in parts]


def _write_run_json(directory: Path, command: str, args: argparse.Namespace, extra=None) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    record = dict(
        command=command,
        args={k: v for k, v in vars(args).items() if k != "func"},
        version=__version__,
        python=platform.python_version(),
        numpy=np.__version__,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    )
    if extra:
        record.update(extra)
    (directory / "run.json").write_text(json.dumps(record, indent=2, default=str))


def _out_dir(path) -> Path:
    return Path(path).resolve().parent


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def load_bank(spec: str) -> FilterBank:
    """Wavelet name or path to a bank JSON file."""
    if spec.lower() in NAMED_WAVELETS:
        return named_bank(spec)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown wavelet or missing bank file: {spec!r}")
    try:
        return FilterBank.from_json(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{spec}: cannot parse filter bank JSON ({exc})") from None


# -- subcommands -------------------------------------------------------------


def cmd_design(args) -> int:
    if args.wavelet is not None:
        if args.wavelet.lower() not in NAMED_WAVELETS:
            raise UsageError(
                f"unknown wavelet {args.wavelet!r}; choose from {', '.join(NAMED_WAVELETS)}"
            )
        bank = named_bank(args.wavelet)
    else:
        bank = lattice_to_filters(parse_floats(args.angles))
    _emit(bank.to_json(), args.out)
    if args.out:
        _write_run_json(_out_dir(args.out), "design", args)
    return 0


def cmd_fit(args) -> int:
    if args.bank is not None:
        target = load_bank(args.bank).h0
    else:
        target = np.asarray(parse_floats(args.h0))
    angles = fit_angles(target, restarts=args.restarts, seed=args.seed)
    bank = lattice_to_filters(angles)
    residual = float(np.max(np.abs(bank.h0 - target)))
    _emit(bank.to_json(), args.out)
    print(f"fit residual (max abs): {residual:.3e}", file=sys.stderr)
    if args.out:
        _write_run_json(_out_dir(args.out), "fit", args, {"residual": residual})
    return 0


def cmd_analyze(args) -> int:
    bank = load_bank(args.bank)
    grid = SpectralGrid(K=args.K, w_s_lowpass=parse_radians(args.ws))
    table = response_table(bank.h0, bank.h1, grid)
    e_sbn = stopband_energy_numeric(bank.h0, grid)
    summary = {
        "L_SBE": sbe_loss(bank.h0, grid),
        "E_sbn": e_sbn,
        "E_total": float(bank.h0 @ bank.h0),
        "K": grid.K,
        "w_s": grid.w_s_lowpass,
        "E_sbn_h1": highpass_stopband_energy(bank.h1, grid),
        "dc_gain": bank.dc_gain,
    }
    text = json.dumps(summary, indent=2)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_response_csv(out, table)
        summary_path = Path(args.summary) if args.summary else out.with_suffix(".json")
        summary_path.write_text(text + "\n")
        _write_run_json(_out_dir(out), "analyze", args)
    else:
        write_response_csv("/dev/stdout", table)
    print(text, file=sys.stderr if not args.out else sys.stdout)
    return 0


def _pad_square_even(img: np.ndarray) -> np.ndarray:
    rows, cols = img.shape[-2:]
    n = max(rows, cols)
    n += n % 2
    pad = [(0, 0)] * (img.ndim - 2) + [(0, n - rows), (0, n - cols)]
    return np.pad(img, pad, mode="edge")


def cmd_dwt(args) -> int:
    bank = load_bank(args.bank)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.inverse:
        src = Path(args.input)
        meta = json.loads((src / "dwt.json").read_text())
        parts = [read_lwt1(src / f"{name}.lwt").astype(np.float64) for name in SUBBAND_FILES]
        img = idwt2(bank, SubbandSet(*parts))
        rows, cols = meta["shape"]
        img = img[..., :rows, :cols]
        write_lwt1(out / "reconstruction.lwt", img)
        if args.pgm:
            write_pgm(out / "reconstruction.pgm", np.clip(img[0], 0, 255))
    else:
        img = read_image(args.input)
        shape = img.shape[-2:]
        sub = dwt2(bank, _pad_square_even(img))
        for name, band in zip(SUBBAND_FILES, sub.as_tuple()):
            write_lwt1(out / f"{name}.lwt", band)
            if args.pgm:
                write_pgm(out / f"{name}.pgm", rescale_to_u8(band[0]))
        (out / "dwt.json").write_text(
            json.dumps({"shape": list(shape), "channels": int(img.shape[0]), "taps": bank.taps})
        )
    _write_run_json(out, "dwt", args)
    return 0


def _train_config(args):
    from .train import TrainConfig

    return TrainConfig(
        alpha=getattr(args, "alpha", 0.0),
        lr=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        K=args.K,
        w_s=parse_radians(args.ws),
        wavelet=args.wavelet,
        baseline=args.baseline,
        data_seed=args.data_seed,
        per_class=args.per_class,
        train_subset=args.train_subset,
        float64=args.float64,
    )


def _save_run(model, out: Path) -> None:
    save_checkpoint(out / "checkpoint", model)
    write_metrics_csv(out / "metrics.csv", model.history)


def cmd_train(args) -> int:
    from .data import make_dataset
    from .train import train

    cfg = _train_config(args)
    data = make_dataset(cfg.dataset_seed, cfg.per_class)
    model = train(data, cfg)
    out = Path(args.out)
    _save_run(model, out)
    _write_run_json(out, "train", args, {"config": cfg.to_dict()})
    final = model.history[-1]
    print(json.dumps({k: final[k] for k in ("l_ce", "l_sbe", "l_total", "train_acc", "test_acc")}))
    return 0


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .train import alpha_sweep

    alphas = parse_floats(args.alphas)
    cfg = replace(_train_config(args), alpha=0.0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = []
    for entry in alpha_sweep(cfg, alphas):
        run_dir = out / f"alpha_{entry['alpha']:g}"
        _save_run(entry["model"], run_dir)
        for i, table in enumerate(entry["responses"]):
            write_response_csv(run_dir / f"response_unit{i}.csv", table)
        report.append(
            dict(
                alpha=entry["alpha"],
                l_sbe=entry["final"]["l_sbe"],
                unit_sbe=entry["unit_sbe"],
                train_acc=entry["final"]["train_acc"],
                test_acc=entry["final"]["test_acc"],
                dir=run_dir.name,
            )
        )
    (out / "report.json").write_text(json.dumps(report, indent=2))
    _write_run_json(out, "sweep", args, {"config": cfg.to_dict()})
    print(json.dumps(report))
    return 0


def cmd_eval(args) -> int:
    from .data import make_dataset
    from .train import evaluate

    model = load_checkpoint(args.checkpoint)
    cfg = model.config
    seed = cfg.dataset_seed if args.data_seed is None else args.data_seed
    data = make_dataset(seed, cfg.per_class)
    x, y = (data.x_train, data.y_train) if args.split == "train" else (data.x_test, data.y_test)
    ev = evaluate(model, x, y)
    result = dict(
        accuracy=ev.accuracy,
        per_class=ev.per_class.tolist(),
        confusion=ev.confusion.tolist(),
        split=args.split,
        data_seed=seed,
    )
    _emit(json.dumps(result, indent=2), args.out)
    if args.out:
        _write_run_json(_out_dir(args.out), "eval", args)
    return 0


# -- parser ------------------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser, alpha=True) -> None:
    if alpha:
        p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--train-subset", type=int, default=None)
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--ws", default="0.6pi")
    p.add_argument("--wavelet", default="db2", choices=sorted(NAMED_WAVELETS))
    p.add_argument("--baseline", action="store_true", help="average-pool units instead of wavelets")
    p.add_argument("--float64", action="store_true")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbe-wavelets", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build a filter bank from a wavelet name or angles")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--wavelet")
    g.add_argument("--angles", help="comma or space separated radians")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("fit", help="recover lattice angles for a low-pass filter")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--bank", help="bank JSON (its h0 is the target) or wavelet name")
    g.add_argument("--h0", help="comma separated coefficients")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analyze", help="frequency response and stop-band loss")
    p.add_argument("--bank", required=True)
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--ws", default="0.6pi")
    p.add_argument("--out", help="response CSV path")
    p.add_argument("--summary", help="summary JSON path (default: next to --out)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dwt", help="one-level 2-D decomposition of an image")
    p.add_argument("--bank", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pgm", action="store_true", help="also write rescaled PGM previews")
    p.add_argument("--inverse", action="store_true", help="reconstruct from a dwt output directory")
    p.set_defaults(func=cmd_dwt)

    p = sub.add_parser("train", help="train the toy network")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train once per alpha")
    p.add_argument("--alphas", required=True, help="comma separated, e.g. 0,0.1,0.25")
    _add_train_flags(p, alpha=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    from .train import NumericalError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, InvariantError, DimensionError, json.JSONDecodeError,
            OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ConvergenceError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
