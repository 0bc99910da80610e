"""Command-line entry point (``sdcnn-bench``).

Subcommands
-----------
eggholder-gen   write an Eggholder grid dataset to CSV
basis dump      write the knot table (and optionally basis vectors) for a basis config
train           fit one model on a CSV dataset and save it
predict         MC-predict with a saved model; writes mean/sd and optionally raw samples
cv, holdout     run a full experiment from a JSON config
score           score a samples CSV against observations
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..basisgen import basis_vectors, build_resolutions
from ..scoring import score_report
from ..spatial_models import KINDS
from .data import GridSpec, generate_eggholder_dataset, load_csv, read_rows, write_dataset_csv, write_rows, \
    write_surface_csv
from .experiment import ExperimentConfig, cell_rng, run_experiment
from .pipeline import ModelConfig, SpatialRegressor

log = logging.getLogger("sdcnn.bench")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.output_dir = args.out_dir
    return cfg


def cmd_eggholder_gen(args):
    grid = GridSpec(args.n_x1, args.n_x2, tuple(args.bounds))
    out = Path(args.out_dir or ".") / args.out
    write_dataset_csv(out, generate_eggholder_dataset(grid))
    print(f"wrote {grid.n_x1 * grid.n_x2} rows to {out}")


def cmd_basis_dump(args):
    cfg = _load_config(args)
    bc = cfg.basis.resolve(tuple(args.bbox))
    res = build_resolutions(bc)
    out_dir = Path(args.out_dir or cfg.output_dir)
    rows = []
    for r in res:
        for k in r.knots:
            rows.append([r.level, k.row_index, k.col_index, k.center.x1, k.center.x2, r.sigma])
    write_rows(out_dir / "knots.csv", ["level", "row", "col", "x1", "x2", "sigma"], rows)
    if args.data:
        ds = load_csv(args.data)
        vec = basis_vectors(ds.scaled_locations, res, bc.kernel_spec)
        header = ["location_id"] + [f"phi_{j}" for j in range(vec.shape[1])]
        write_rows(out_dir / "basis_vectors.csv", header, ([i, *v] for i, v in zip(ds.location_ids, vec)))
    print(f"{len(res)} resolutions, {sum(r.n_knots for r in res)} knots -> {out_dir}")


def cmd_train(args):
    cfg = _load_config(args)
    ds = load_csv(args.data)
    obs = ds.observed
    mc = next((m for m in cfg.models if m.kind == args.model), ModelConfig(args.model))
    reg = SpatialRegressor(mc, cfg.basis)
    hist = reg.fit(ds.locations[obs], ds.responses[obs], cfg.train, cell_rng(cfg.seed, 0, 0))
    out = Path(cfg.output_dir) / (args.out or f"model_{args.model}.npz")
    out.parent.mkdir(parents=True, exist_ok=True)
    reg.save(out)
    print(f"best epoch {hist.best_epoch}, val loss {hist.best_val_loss:.6g}; saved {out}")


def cmd_predict(args):
    cfg = _load_config(args)
    reg = SpatialRegressor.load(args.model_file)
    ds = load_csv(args.data)
    s = reg.predict_samples(ds.locations, args.n_samples, cell_rng(cfg.seed, 0, 1))
    sd = s.std(axis=1, ddof=1) if s.shape[1] > 1 else np.zeros(len(s))
    out_dir = Path(cfg.output_dir)
    write_surface_csv(out_dir / args.out, ds.locations, s.mean(axis=1), sd)
    if args.samples_out:
        header = ["location_id", "x1", "x2"] + [f"s{j}" for j in range(s.shape[1])]
        write_rows(out_dir / args.samples_out, header,
                   ([i, x[0], x[1], *row] for i, x, row in zip(ds.location_ids, ds.locations, s)))
    print(f"predicted {len(s)} locations -> {out_dir / args.out}")


def cmd_experiment(args, split_type):
    cfg = _load_config(args)
    cfg.split.type = split_type
    cfg.validate()
    res = run_experiment(cfg)
    for c in res.cells:
        status = f"error: {c.error}" if c.error else \
            f"mse={c.report.mse:.6g} crps={c.report.crps_mean:.6g} icr={c.report.icr:.3f}"
        print(f"{c.model:>12s} {c.fold:>8s} {c.seconds:7.1f}s {status}")
    for kind, (n, r) in res.pooled.items():
        print(f"{kind:>12s}   pooled n={n} mse={r.mse:.6g} crps={r.crps_mean:.6g} icr={r.icr:.3f}")
    print(f"outputs in {res.output_dir}")
    return 1 if res.errors else 0


def cmd_score(args):
    header, rows = read_rows(args.samples)
    scols = [i for i, h in enumerate(header) if h.startswith("s") and h[1:].isdigit()]
    if not scols:
        raise ValueError(f"{args.samples}: no sample columns s0, s1, ...")
    samples = np.array([[float(r[i]) for i in scols] for r in rows])
    ds = load_csv(args.data)
    if len(ds) != len(samples):
        raise ValueError(f"{len(samples)} sample rows but {len(ds)} observations")
    keep = ds.observed
    rep = score_report(samples[keep], ds.responses[keep], args.alpha, args.standard)
    out = {"n": int(keep.sum()), "mse": rep.mse, "crps": rep.crps_mean, "icr": rep.icr,
           "interval_score": rep.interval_score_mean, "alpha": args.alpha}
    print(json.dumps(out))
    if args.out_dir:
        write_rows(Path(args.out_dir) / "score.csv", list(out), [list(out.values())])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out-dir", help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sdcnn-bench", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("eggholder-gen", parents=[common], help="write an Eggholder dataset CSV")
    g.add_argument("--n-x1", type=int, default=60)
    g.add_argument("--n-x2", type=int, default=60)
    g.add_argument("--bounds", type=float, nargs=4, default=[-500.0, 500.0, -500.0, 500.0])
    g.add_argument("--out", default="eggholder.csv")
    g.set_defaults(func=cmd_eggholder_gen)

    b = sub.add_parser("basis", help="basis utilities")
    bsub = b.add_subparsers(dest="basis_command", required=True)
    bd = bsub.add_parser("dump", parents=[common], help="write knots.csv (and basis_vectors.csv with --data)")
    bd.add_argument("--bbox", type=float, nargs=4, default=[0.0, 1.0, 0.0, 1.0],
                    help="bounding box in scaled coordinates")
    bd.add_argument("--data", help="CSV whose scaled locations get basis vectors")
    bd.set_defaults(func=cmd_basis_dump)

    t = sub.add_parser("train", parents=[common], help="fit one model on a CSV dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--model", choices=KINDS, default="sdcnn")
    t.add_argument("--out", help="model file name inside the output directory")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common], help="MC-predict with a saved model")
    pr.add_argument("--model-file", required=True)
    pr.add_argument("--data", required=True, help="CSV of locations (y may be empty)")
    pr.add_argument("--n-samples", type=int, default=100)
    pr.add_argument("--out", default="predictions.csv")
    pr.add_argument("--samples-out", help="also write raw samples to this file")
    pr.set_defaults(func=cmd_predict)

    for name in ("cv", "holdout"):
        e = sub.add_parser(name, parents=[common], help=f"run a {name} experiment")
        e.set_defaults(func=lambda a, n=name: cmd_experiment(a, n))

    s = sub.add_parser("score", parents=[common], help="score a samples CSV against observations")
    s.add_argument("--samples", required=True, help="CSV with columns s0..s{S-1}")
    s.add_argument("--data", required=True, help="CSV with the observations, same row order")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--standard", action="store_true", help="use the 2/alpha interval-score penalty")
    s.set_defaults(func=cmd_score)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = args.func(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
