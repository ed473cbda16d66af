"""Command-line entry point: ``v2ichan {dataset,train,sweep,gradcheck}``.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
(training divergence, gradient check above tolerance), 4 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import harness, mlp, records
from .config import load_config
from .errors import ConfigError, MissingModelError

log = logging.getLogger("v2ichan")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
GRADCHECK_TOL = 1e-6


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args, cfg) -> Path:
    return Path(args.out if args.out is not None else cfg.experiment.output_dir)


def _write_all(files: dict):
    for path, text in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        log.info("wrote %s", path)


def cmd_dataset(args) -> int:
    cfg = _config(args)
    exp = cfg.experiment
    ds = harness.build_dataset(cfg.channel, cfg.ofdm, exp.train_snr_db, exp.n_frames, exp.seed,
                               frames_per_trajectory=exp.frames_per_trajectory, horizon=exp.horizon)
    target = Path(args.output) if args.output else _out_dir(args, cfg) / "dataset.csv"
    _write_all({target: records.dataset_text(ds)})
    print(f"{len(ds)} samples -> {target}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    ds = records.read_dataset(args.dataset or out / "dataset.csv")
    run = harness.train_predictor(ds, cfg.mlp.train, cfg.mlp.n_h, augment=cfg.mlp.augment)
    model_path = Path(args.model) if args.model else out / "model.txt"
    files = {
        model_path: mlp.format_network(run.predictor.network),
        mlp.scaler_path(model_path): mlp.format_scaler(run.predictor.scaler),
        out / "mse_epoch.csv": records.mse_epoch_csv(harness.mse_vs_epoch(run)),
    }
    _write_all(files)
    if run.history:
        last = run.history[-1].extra
        print(f"final train nmse {last['train']:.6g}; best epoch {run.best_epoch}")
    else:
        print("no epochs run; model left at its initial weights")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    exp = cfg.experiment
    out = _out_dir(args, cfg)
    predictor = None
    if "mlp" in exp.estimators:
        model_path = Path(args.model) if args.model else out / "model.txt"
        if not model_path.exists():
            raise MissingModelError(f"estimator 'mlp' requested but no model at {model_path}")
        predictor = mlp.load_predictor(model_path)
    result = harness.ber_sweep(
        cfg.channel, cfg.ofdm, exp.snr_db, exp.estimators, exp.frames_per_point, exp.seed,
        predictor=predictor, frames_per_trajectory=exp.frames_per_trajectory,
        horizon=exp.horizon, data_symbols=exp.data_symbols)
    files = {out / "ber.csv": records.ber_csv(result, cfg.ofdm.bits_per_frame * exp.data_symbols)}
    if args.dataset and predictor is not None:
        ds = records.read_dataset(args.dataset)
        outputs = predictor.predict(ds.inputs)
        files[out / "hist.csv"] = records.hist_csv(
            harness.error_histogram(outputs, ds.targets, exp.hist_bins, split=ds.split))
        files[out / "regression.csv"] = records.regression_csv(records.regression_points(predictor, ds))
        files[out / "regression_stats.csv"] = records.regression_stats_csv(
            harness.split_regression(predictor, ds))
    _write_all(files)
    for name in exp.estimators:
        snrs, bers = result.curve(name)
        print(f"{name:12s} " + " ".join(f"{s:g}dB:{b:.3e}" for s, b in zip(snrs, bers)))
    return EXIT_OK


def cmd_gradcheck(args, grad_fn=mlp.gradients) -> int:
    seed = 0 if args.seed is None else args.seed
    worst = mlp.gradient_check(args.cases, seed, grad_fn=grad_fn)
    ok = worst < GRADCHECK_TOL
    print(f"gradcheck cases={args.cases} seed={seed} max_relative_error={worst:.3e} "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seeds")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    p = argparse.ArgumentParser(prog="v2ichan", parents=[common],
                                description="OFDM V2I channel estimation experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dataset", parents=[common], help="simulate and write a training dataset")
    s.add_argument("--output", help="dataset file (default <out>/dataset.csv)")
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("train", parents=[common], help="train the MLP on a dataset file")
    s.add_argument("--dataset", help="dataset file (default <out>/dataset.csv)")
    s.add_argument("--model", help="model file to write (default <out>/model.txt)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", parents=[common], help="BER sweep over the SNR grid")
    s.add_argument("--model", help="model file (default <out>/model.txt)")
    s.add_argument("--dataset", help="dataset for histogram and regression outputs")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("gradcheck", parents=[common], help="backprop vs finite differences")
    s.add_argument("--cases", type=int, default=100)
    s.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("config", "seed", "out"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gradcheck" and args.cases < 1:
            raise ConfigError("cases", "must be >= 1")
        return args.func(args)
    except (ConfigError, MissingModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
