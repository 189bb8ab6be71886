"""Command-line experiment pipeline: generate, train, solve, report.

All artifacts are deterministic functions of the configuration: matrices
in Matrix Market, vectors and metadata in JSON, tables in CSV, and a
manifest with SHA-256 checksums that downstream commands verify.

Training runs on the stencil-scaled system A/sigma with
sigma = mean(diag(A))/4, so that the fixed default step size is
meaningful regardless of grid resolution; factors are rescaled by
sqrt(sigma) on output.  Condition numbers, spectra, and CG iteration
counts are invariant under this scaling.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .ic0 import ic0_factorize
from .mmio import read_lower_factor, read_matrix_market, write_matrix_market
from .objective import TrainConfig, TrainReport, train
from .problem import (CoefficientField, GridSpec, ProbeSet, assemble_fvm,
                      attach_solutions, gaussian_random_field, sample_probes)
from .solver import CgMaxIterationsError, pcg_detailed
from .sparse import CsrMatrix, LowerFactor
from .spectral import condition_number, eigen_histogram, precond_spectrum

DENSE_DIAG_LIMIT = 4096


@dataclass(frozen=True)
class ExperimentConfig:
    grid: int = 64
    grf_seed: int = 0
    corr_len: float = 0.2
    target_contrast: float = 10.0
    probe_count: int = 1000
    probe_seed: int = 100
    step_size: float = 1e-3
    batch_size: int = 512
    epochs: int = 10_000
    train_seed: int = 7
    diag_floor: float = 1e-8
    cg_tol: float = 1e-8
    histogram_bins: int = 40
    histogram_scale: str = "log"

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path) as f:
            return ExperimentConfig(**json.load(f))

    def to_json(self, path) -> None:
        _write_json(path, asdict(self))

    def train_config(self, loss_kind: str) -> TrainConfig:
        return TrainConfig(step_size=self.step_size, batch_size=self.batch_size,
                           epochs=self.epochs, seed=self.train_seed,
                           diag_floor=self.diag_floor, loss_kind=loss_kind)


def _write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, files: list[str], extra: dict) -> None:
    manifest = dict(extra)
    manifest["checksums"] = {name: _sha256(out / name) for name in files}
    _write_json(out / "manifest.json", manifest)


def _check_manifest(bundle: Path, names: list[str]) -> dict:
    with open(bundle / "manifest.json") as f:
        manifest = json.load(f)
    for name in names:
        if name not in manifest["checksums"]:
            raise SystemExit(f"manifest has no checksum for {name}")
        if _sha256(bundle / name) != manifest["checksums"][name]:
            raise SystemExit(f"checksum mismatch for {name}: bundle was modified")
    return manifest


def _write_csv(path, header: list[str], rows, comments: list[str] = ()) -> None:
    with open(path, "w", newline="\n") as f:
        for c in comments:
            f.write(f"# {c}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return np.format_float_scientific(x, precision=16, trim="-")


def training_scale(a: CsrMatrix) -> float:
    """Scale factor sigma: training runs on A/sigma with mean diagonal 4."""
    return float(a.diagonal().mean()) / 4.0


def _scaled(a: CsrMatrix, sigma: float) -> CsrMatrix:
    return CsrMatrix(a.n, a.row_ptr, a.col_idx, a.values / sigma, symmetric=True)


def cmd_generate(args) -> None:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    spec = GridSpec(cfg.grid, cfg.grid)
    field = gaussian_random_field(spec, seed=cfg.grf_seed, corr_len=cfg.corr_len,
                                  target_contrast=cfg.target_contrast)
    a = assemble_fvm(spec, field)
    sigma = training_scale(a)
    probes = attach_solutions(_scaled(a, sigma), sample_probes(spec.n, cfg.probe_count,
                                                               seed=cfg.probe_seed))

    write_matrix_market(out / "matrix.mtx", a)
    _write_json(out / "coefficient_field.json", {
        "grid": cfg.grid,
        "corr_len": cfg.corr_len,
        "target_contrast": cfg.target_contrast,
        "seed": cfg.grf_seed,
        "contrast": field.contrast,
        "k": [float(_fmt(v)) for v in field.k],
    })
    _write_json(out / "probes.json", {
        "seed": cfg.probe_seed,
        "count": probes.count,
        "training_scale": float(sigma),
        "probes": [[float(_fmt(v)) for v in row] for row in probes.probes],
        "solutions": [[float(_fmt(v)) for v in row] for row in probes.solutions],
    })
    cfg.to_json(out / "config.json")
    _write_manifest(out, ["matrix.mtx", "coefficient_field.json", "probes.json", "config.json"],
                    {"n": spec.n, "grid": cfg.grid, "grf_seed": cfg.grf_seed,
                     "probe_seed": cfg.probe_seed, "train_seed": cfg.train_seed,
                     "training_scale": float(sigma)})
    print(f"wrote problem bundle to {out} (n={spec.n})")


def _load_bundle(bundle: Path):
    manifest = _check_manifest(bundle, ["matrix.mtx", "coefficient_field.json",
                                        "probes.json", "config.json"])
    cfg = ExperimentConfig.from_json(bundle / "config.json")
    a = read_matrix_market(bundle / "matrix.mtx", symmetric=True)
    with open(bundle / "probes.json") as f:
        pdata = json.load(f)
    probes = ProbeSet(probes=np.asarray(pdata["probes"]), seed=pdata["seed"],
                      solutions=np.asarray(pdata["solutions"]) if pdata.get("solutions") else None)
    return manifest, cfg, a, probes


def cmd_train(args) -> None:
    bundle = Path(args.bundle)
    manifest, cfg, a, probes = _load_bundle(bundle)
    if args.epochs is not None:
        cfg = ExperimentConfig(**{**asdict(cfg), "epochs": args.epochs})
    sigma = manifest["training_scale"]
    an = _scaled(a, sigma)
    l0 = ic0_factorize(an)
    root = float(np.sqrt(sigma))
    write_matrix_market(bundle / "factor_ic0.mtx", l0.with_values(l0.values * root))

    loss_kind = args.loss
    if loss_kind == "weighted" and probes.solutions is None:
        raise SystemExit("weighted loss requires probe solutions in the bundle")
    report = train(an, l0, probes, cfg.train_config(loss_kind))
    write_matrix_market(bundle / f"factor_{loss_kind}.mtx",
                        report.factor.with_values(report.factor.values * root))
    _write_json(bundle / f"train_report_{loss_kind}.json", {
        "loss_kind": report.loss_kind,
        "seed": report.seed,
        "epochs_run": report.epochs_run,
        "step_size": report.step_size,
        "floor_activations": report.floor_activations,
        "final_normalized_loss": float(_fmt(report.history[-1])),
    })
    _write_csv(bundle / f"loss_history_{loss_kind}.csv", ["epoch", "normalized_loss"],
               [(e, _fmt(v)) for e, v in enumerate(report.history)])
    print(f"trained {loss_kind} factor: final normalized loss {report.history[-1]:.4f}, "
          f"floor activations {report.floor_activations}")


def _factor_for(bundle: Path, name: str) -> LowerFactor:
    path = bundle / f"factor_{name}.mtx"
    if not path.exists():
        raise SystemExit(f"missing {path}; run the train command first")
    return read_lower_factor(path)


def cmd_solve(args) -> None:
    bundle = Path(args.bundle)
    _, cfg, a, probes = _load_bundle(bundle)
    l = _factor_for(bundle, args.factor) if args.factor != "none" else None
    b = probes.probes[args.probe_index]
    try:
        res = pcg_detailed(a, b, l, rel_tol=cfg.cg_tol)
    except CgMaxIterationsError as exc:
        raise SystemExit(str(exc))
    _write_csv(bundle / f"cg_history_{args.factor}.csv", ["iteration", "rel_residual"],
               [(i, _fmt(v)) for i, v in enumerate(res.history)])
    print(f"pcg({args.factor}) converged in {res.iterations} iterations")


def cmd_report(args) -> None:
    bundle = Path(args.bundle)
    _, cfg, a, probes = _load_bundle(bundle)
    factors = {"ic0": _factor_for(bundle, "ic0"),
               "unweighted": _factor_for(bundle, "unweighted"),
               "weighted": _factor_for(bundle, "weighted")}

    # (i) condition numbers, column order as published
    header = ["A", "Frobenius", "Weighted Frobenius", "IC(0)"]
    if a.n <= DENSE_DIAG_LIMIT:
        spectra = {"A": precond_spectrum(a, LowerFactor.identity(a.n)),
                   "Frobenius": precond_spectrum(a, factors["unweighted"]),
                   "Weighted Frobenius": precond_spectrum(a, factors["weighted"]),
                   "IC(0)": precond_spectrum(a, factors["ic0"])}
        row = [_fmt(condition_number(spectra[h])) for h in header]
    else:
        spectra = None
        row = ["n/a"] * 4
    _write_csv(bundle / "condition_numbers.csv", header, [row])

    # (ii) eigenvalue histograms, one CSV per panel
    if spectra is not None:
        panel_names = {"A": "A", "Weighted Frobenius": "weighted",
                       "IC(0)": "ic0", "Frobenius": "unweighted"}
        for label, short in panel_names.items():
            edges, counts = eigen_histogram(spectra[label], cfg.histogram_bins,
                                            cfg.histogram_scale)
            _write_csv(bundle / f"eig_hist_{short}.csv", ["bin_lo", "bin_hi", "count"],
                       [(_fmt(lo), _fmt(hi), int(c))
                        for lo, hi, c in zip(edges[:-1], edges[1:], counts)],
                       comments=[f"scale={cfg.histogram_scale}", f"bins={cfg.histogram_bins}"])

    # (iii) CG residual histories, same right-hand side for every method
    b = probes.probes[0]
    iter_rows = []
    for name, l in [("none", None)] + list(factors.items()):
        try:
            res = pcg_detailed(a, b, l, rel_tol=cfg.cg_tol)
            iters = res.iterations
            hist = res.history
        except CgMaxIterationsError as exc:
            iters = -1
            hist = exc.history
        _write_csv(bundle / f"cg_history_{name}.csv", ["iteration", "rel_residual"],
                   [(i, _fmt(v)) for i, v in enumerate(hist)])
        iter_rows.append((name, iters))
    _write_csv(bundle / "cg_iterations.csv", ["preconditioner", "iterations"], iter_rows)

    # (iv) loss histories come from the train command; verify they are present
    for kind in ("unweighted", "weighted"):
        if not (bundle / f"loss_history_{kind}.csv").exists():
            print(f"note: loss_history_{kind}.csv missing (train not run for {kind})",
                  file=sys.stderr)
    print(f"report written to {bundle}")


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="precopt",
                                     description="IC(0) factor optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a problem bundle")
    p.add_argument("--config", help="JSON experiment config (defaults used if omitted)")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="run IC(0) and gradient training on a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--loss", choices=["unweighted", "weighted"], required=True)
    p.add_argument("--epochs", type=int, help="override config epoch count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("solve", help="run PCG on one probe right-hand side")
    p.add_argument("--bundle", required=True)
    p.add_argument("--factor", default="none",
                   help="factor name (ic0, unweighted, weighted) or 'none'")
    p.add_argument("--probe-index", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="emit condition-number table and figure data")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
