"""Command-line entry point.

Subcommands: gen (sample a dataset), fit (calibrated ensembles over a
bandwidth grid with Mass-Volume selection), eval (score a query CSV),
grid (2-D lattice export for contour plots), compare (method comparison
on a known mixture). Every command is deterministic given its
configuration; reruns produce byte-identical files.

Exit codes: 0 success, 2 validation error, 3 numeric failure.
"""

import argparse
import json
import statistics
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import MassGrid
from .datagen import (
    MixtureSpec,
    bimodal_spec,
    boston_rooms_lstat,
    contaminated_bimodal_spec,
    read_samples_csv,
    sample_mixture,
    standardize,
    two_moons,
    write_samples_csv,
)
from .ensemble import Ensemble, ensemble_scores
from .errors import MvcalError, ValidationError
from .experiments import (
    empirical_mass,
    run_dimension_sweep,
    run_sigma_comparison,
    select_sigma,
)
from .geometry import HyperRect, export_curve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


@dataclass
class RunConfig:
    nu: float = 0.4
    alpha: float = 0.95
    mass_halfwidth: float = 0.04
    mass_count: int = 10
    train_fraction: float = 0.8
    B: int = 10
    sigma_min: float = 0.1
    sigma_max: float = 3.0
    sigma_count: int = 20
    mc_samples: int = 10_000
    seed: int = 0
    kkt_tolerance: float = 1e-6
    max_iterations: int = 10_000_000
    threads: int = 1
    input: str = ""
    out: str = ""

    def sigmas(self):
        if self.sigma_count < 1:
            raise ValidationError("sigma_count must be >= 1")
        if self.sigma_count == 1:
            return [float(self.sigma_min)]
        return [float(s) for s in np.linspace(self.sigma_min, self.sigma_max, self.sigma_count)]

    def mass_grid(self) -> MassGrid:
        return MassGrid(alpha=self.alpha, c=self.mass_halfwidth, count=self.mass_count)

    def validate(self):
        self.mass_grid()
        self.sigmas()
        if not (0.0 < self.nu < 1.0):
            raise ValidationError(f"nu must lie in (0, 1), got {self.nu!r}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValidationError("train_fraction must lie in (0, 1)")
        if self.B < 1:
            raise ValidationError("B must be >= 1")
        if self.mc_samples < 1:
            raise ValidationError("mc_samples must be >= 1")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        return self


def _load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    return RunConfig(**raw)


def _config_from_args(args) -> RunConfig:
    cfg = _load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg.validate()


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--nu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--mass-halfwidth", dest="mass_halfwidth", type=float)
    p.add_argument("--mass-count", dest="mass_count", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("-B", "--members", dest="B", type=int)
    p.add_argument("--sigma-min", dest="sigma_min", type=float)
    p.add_argument("--sigma-max", dest="sigma_max", type=float)
    p.add_argument("--sigma-count", dest="sigma_count", type=int)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--kkt-tolerance", dest="kkt_tolerance", type=float)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--threads", type=int, help="worker cap; results do not depend on it")


def _sigma_tag(sigma: float) -> str:
    return format(float(sigma), ".6g")


def cmd_gen(args) -> int:
    if args.descriptor:
        with open(args.descriptor, "r", encoding="utf-8") as fh:
            spec = MixtureSpec.from_dict(json.load(fh))
    elif args.preset == "bimodal":
        spec = bimodal_spec(args.dim)
    elif args.preset == "bimodal-outliers":
        spec = contaminated_bimodal_spec()
    elif args.preset == "moons":
        X = two_moons(args.n, noise=args.noise, seed=args.seed)
        write_samples_csv(X, args.out)
        print(f"{args.out}: {X.shape[0]} rows")
        return EXIT_OK
    elif args.preset == "boston":
        X, _, _ = standardize(boston_rooms_lstat())
        write_samples_csv(X, args.out, columns=["RM", "LSTAT"])
        print(f"{args.out}: {X.shape[0]} rows")
        return EXIT_OK
    else:
        raise ValidationError("gen requires --descriptor or --preset")
    if args.n < 1:
        raise ValidationError("n must be >= 1")
    X = sample_mixture(spec, args.n, args.seed)
    write_samples_csv(X, args.out)
    print(f"{args.out}: {X.shape[0]} rows")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.input:
        raise ValidationError("fit requires --input")
    if not cfg.out:
        raise ValidationError("fit requires --out")
    names, X = read_samples_csv(cfg.input)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)

    grid = cfg.mass_grid()
    selection = select_sigma(
        X,
        cfg.nu,
        cfg.sigmas(),
        grid,
        cfg.B,
        cfg.seed,
        m=cfg.mc_samples,
        mc_seed=cfg.seed,
        train_fraction=cfg.train_fraction,
        kkt_tolerance=cfg.kkt_tolerance,
        max_iterations=cfg.max_iterations,
    )

    for s, curve in sorted(selection.curves.items()):
        export_curve(
            curve, outdir / f"mv_curve_{_sigma_tag(s)}.csv", sigma=s, m=cfg.mc_samples, seed=cfg.seed
        )

    best = selection.best
    with open(outdir / "ensemble.json", "w", encoding="utf-8") as fh:
        fh.write(best.to_json())
        fh.write("\n")

    betas = sorted(best.members[0].offsets)
    warnings = [
        dict(diag, member=b)
        for b, member in enumerate(best.members)
        for diag in member.diagnostics
    ]
    summary = {
        "n": int(X.shape[0]),
        "feature_dim": int(X.shape[1]),
        "feature_names": list(names),
        "sigma_opt": float(selection.sigma_opt),
        "amv_by_sigma": {_sigma_tag(s): selection.curves[s].amv for s in selection.curves},
        "empirical_masses": {repr(b): empirical_mass(best, b, X) for b in betas},
        "box": selection.box.to_dict(),
        "warnings": warnings,
    }
    _write_json(outdir / "summary.json", summary)
    _write_json(outdir / "effective_config.json", asdict(cfg))
    print(f"sigma_opt={selection.sigma_opt!r} -> {outdir}")
    return EXIT_OK


def _load_bundle(bundle):
    bundle = Path(bundle)
    with open(bundle / "ensemble.json", "r", encoding="utf-8") as fh:
        ens = Ensemble.from_json(fh.read())
    with open(bundle / "summary.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    return ens, summary


def cmd_eval(args) -> int:
    ens, _ = _load_bundle(args.bundle)
    _, X = read_samples_csv(args.input)
    if X.shape[0] and X.shape[1] != ens.feature_dim:
        raise ValidationError(
            f"query has {X.shape[1]} features, the model expects {ens.feature_dim}"
        )
    lines = ["score,inside"]
    if X.shape[0]:
        scores = ensemble_scores(ens, args.beta, X)
        inside = scores >= 0.0
        for sc, ins in zip(scores, inside):
            lines.append(f"{float(sc)!r},{int(ins)}")
        fraction = float(np.mean(inside))
    else:
        fraction = float("nan")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"inside fraction: {fraction!r}")
    return EXIT_OK


def cmd_grid(args) -> int:
    ens, summary = _load_bundle(args.bundle)
    if ens.feature_dim != 2:
        raise ValidationError(f"grid export needs d = 2, the model has d = {ens.feature_dim}")
    if args.resolution < 2:
        raise ValidationError("resolution must be >= 2")
    box = HyperRect.from_dict(summary["box"])
    xs = np.linspace(box.lower[0], box.upper[0], args.resolution)
    ys = np.linspace(box.lower[1], box.upper[1], args.resolution)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    lattice = np.column_stack([xx.ravel(), yy.ravel()])
    scores = ensemble_scores(ens, args.beta, lattice)
    lines = ["x,y,score"]
    for (x, y), sc in zip(lattice, scores):
        lines.append(f"{float(x)!r},{float(y)!r},{float(sc)!r}")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"{args.out}: {lattice.shape[0]} lattice points")
    return EXIT_OK


def _write_rows_csv(rows, path):
    if not rows:
        raise ValidationError("no comparison rows produced")
    cols = list(rows[0])
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.out:
        raise ValidationError("compare requires --out")
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = cfg.mass_grid()

    if args.mode == "sigma":
        if args.descriptor:
            with open(args.descriptor, "r", encoding="utf-8") as fh:
                spec = MixtureSpec.from_dict(json.load(fh))
        elif args.preset == "bimodal-outliers":
            spec = contaminated_bimodal_spec()
        else:
            spec = bimodal_spec(args.dim)
        rows = run_sigma_comparison(
            spec,
            n=args.n,
            alpha=cfg.alpha,
            sigmas=cfg.sigmas(),
            grid=grid,
            B=cfg.B,
            reps=args.reps,
            master_seed=cfg.seed,
            m_volume=cfg.mc_samples,
            m_quantile=args.quantile_samples,
            include_plugin=args.plugin,
            train_fraction=cfg.train_fraction,
            kkt_tolerance=cfg.kkt_tolerance,
            max_iterations=cfg.max_iterations,
        )
        summary = {
            "mode": "sigma",
            "median_calibrated_error": statistics.median(r["calibrated_error"] for r in rows),
            "median_ocsvm_best_error": statistics.median(r["ocsvm_best_error"] for r in rows),
        }
        if args.plugin:
            summary["median_plugin_error"] = statistics.median(r["plugin_error"] for r in rows)
    else:
        dims = [int(v) for v in args.dims.split(",")]
        rows = run_dimension_sweep(
            dims=dims,
            n=args.n,
            alpha=cfg.alpha,
            sigmas=cfg.sigmas(),
            grid=grid,
            B=cfg.B,
            reps=args.reps,
            master_seed=cfg.seed,
            m_volume=cfg.mc_samples,
            m_quantile=args.quantile_samples,
            train_fraction=cfg.train_fraction,
            kkt_tolerance=cfg.kkt_tolerance,
            max_iterations=cfg.max_iterations,
        )
        summary = {"mode": "dimension", "per_dimension": {}}
        for d in sorted({r["d"] for r in rows}):
            sub = [r for r in rows if r["d"] == d]
            summary["per_dimension"][str(d)] = {
                "median_calibrated_error": statistics.median(r["calibrated_error"] for r in sub),
                "median_plugin_error": statistics.median(r["plugin_error"] for r in sub),
            }

    _write_rows_csv(rows, outdir / "comparison.csv")
    _write_json(outdir / "summary.json", summary)
    _write_json(outdir / "effective_config.json", asdict(cfg))
    print(f"comparison written to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvcal",
        description="Minimum-volume set estimation with offset-calibrated one-class SVM ensembles",
    )
    parser.add_argument("--version", action="version", version=f"mvcal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a synthetic dataset to CSV")
    p.add_argument("--descriptor", help="mixture descriptor JSON")
    p.add_argument(
        "--preset", choices=["bimodal", "bimodal-outliers", "moons", "boston"], help="built-in dataset"
    )
    p.add_argument("--dim", type=int, default=2, help="dimension for the bimodal preset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.1, help="moons noise scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit calibrated ensembles and select the bandwidth")
    p.add_argument("--input", help="training CSV")
    p.add_argument("--out", help="output bundle directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score a query CSV against a fitted bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="export a 2-D score lattice for contour plots")
    p.add_argument("--bundle", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--resolution", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("compare", help="compare methods on a known mixture")
    p.add_argument("--mode", choices=["sigma", "dimension"], default="sigma")
    p.add_argument("--descriptor", help="mixture descriptor JSON (sigma mode)")
    p.add_argument("--preset", choices=["bimodal", "bimodal-outliers"], default="bimodal")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--dims", default="2,3,4,5,6,7,8", help="dimension list (dimension mode)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--plugin", action="store_true", help="include the KDE plug-in in sigma mode")
    p.add_argument("--quantile-samples", dest="quantile_samples", type=int, default=1_000_000)
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MvcalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
