"""Command-line front end.

Every run writes its outputs plus ``manifest.json`` into ``--out``. The
manifest stores the fully resolved parameters, so ``--config manifest.json``
repeats a run.

Exit codes: 0 success, 2 configuration error, 3 numerical or truncation error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .classical import ClassicalMap, orbits, web_scan, web_symmetry_score
from .config import KEYS, Config, flag_name, resolve
from .errors import (
    AdiabaticValidityError,
    ConfigError,
    ConsistencyError,
    DKHOError,
    InvalidResonanceError,
    NotPeriodicError,
    SingularKickIndexError,
    TruncationError,
    TruncationWarning,
)
from .fockspace import (
    check_leakage,
    coherent_state,
    expectation_XP,
    floquet,
    iter_evolve,
    required_dim,
    top_window,
    write_state_csv,
)
from .io import sha256, write_counts_csv, write_json, write_pgm
from .params import (
    HBAR,
    ModelParams,
    PhysicalParams,
    kappa_from_physical,
    nu_tau,
    phasepoint_from_alpha,
)
from .protocol import QGridSpec, overlap_series, radial_mass_outside, time_averaged_q

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _alpha(cfg: Config) -> complex:
    return complex(cfg["alpha_re"], cfg["alpha_im"])


def _fock_dim(cfg: Config, alpha: complex) -> int:
    if cfg["fock_dim"] > 0:
        return cfg["fock_dim"]
    # room for the state to spread to twice its initial radius
    return max(64, required_dim(2.0 * abs(alpha) + 4.0, 1e-10))


def _model(cfg: Config, alpha: complex, need_kappa2: bool = False) -> ModelParams:
    return ModelParams(
        r=cfg["r"],
        q=cfg["q"],
        eta=cfg["eta"],
        kappa1=cfg["kappa1"],
        kappa2=cfg["kappa2"] if need_kappa2 else cfg.get("kappa2", cfg["kappa1"]),
        fock_dim=_fock_dim(cfg, alpha),
        n_kicks=cfg["n_kicks"],
    )


def _jobs(cfg: Config) -> int:
    return cfg["jobs"] if cfg["jobs"] > 0 else (os.cpu_count() or 1)


def cmd_web(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    theta = nu_tau((cfg["r"], cfg["q"]))
    cmap = ClassicalMap.from_kappa(cfg["kappa1"], theta)
    rng = np.random.default_rng(cfg["seed"])
    centre = np.array([cfg["ic_x"], cfg["ic_p"]])
    ics = centre + cfg["ic_spread"] * rng.uniform(-1.0, 1.0, size=(cfg["n_ics"], 2))
    ext = cfg["extent"]
    bounds = ((-ext, ext), (-ext, ext))
    hist = web_scan(ics, cmap, cfg["n_kicks"], bounds, cfg["resolution"], jobs=_jobs(cfg))
    paths = [out / "web.csv", out / "web.pgm"]
    write_counts_csv(paths[0], hist)
    write_pgm(paths[1], hist, scale="log")
    pts = orbits(ics, cmap, cfg["n_kicks"])
    radii = np.hypot(pts[..., 0], pts[..., 1]).max(axis=1)
    summary = {
        "amplitude": cmap.amplitude,
        "theta": theta,
        "points_in_window": int(hist.sum()),
        "max_radius": float(radii.max()),
        "median_max_radius": float(np.median(radii)),
        "symmetry_score": web_symmetry_score(ics, cmap, cfg["n_kicks"], ext, cfg["symmetry_resolution"]),
    }
    return paths, summary


def cmd_evolve(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    alpha = _alpha(cfg)
    mp = _model(cfg, alpha)
    F = floquet(mp.kappa1, mp.eta, mp.theta, mp.fock_dim)
    psi0 = coherent_state(alpha, mp.fock_dim)
    top = top_window(mp.fock_dim)
    paths = [out / "centroid.csv"]
    leak = []
    stride = max(1, cfg["stride"])
    if cfg["save_states"]:
        (out / "states").mkdir(exist_ok=True)
    with open(paths[0], "w", newline="") as fh:
        fh.write("n,X,P,mean_n,leakage\n")
        for k, psi in enumerate(iter_evolve(F, psi0, mp.n_kicks)):
            pop = np.abs(psi) ** 2
            leak.append(float(pop[top:].sum()))
            if k % stride == 0 or k == mp.n_kicks:
                X, P = expectation_XP(psi, mp.eta)
                fh.write(f"{k},{X:.17g},{P:.17g},{pop @ np.arange(mp.fock_dim):.17g},{leak[-1]:.17g}\n")
                if cfg["save_states"]:
                    p = out / "states" / f"state_{k:06d}.csv"
                    write_state_csv(p, psi)
                    paths.append(p)
            last = psi
    final = out / "state_final.csv"
    write_state_csv(final, last)
    paths.append(final)
    check_leakage(np.array(leak), mp.fock_dim, cfg["leak_warn"], cfg["leak_error"])
    return paths, {"fock_dim": mp.fock_dim, "max_leakage": max(leak)}


def cmd_overlap(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    alpha = _alpha(cfg)
    mp = _model(cfg, alpha, need_kappa2=True)
    F1 = floquet(mp.kappa1, mp.eta, mp.theta, mp.fock_dim)
    F2 = floquet(mp.kappa2, mp.eta, mp.theta, mp.fock_dim)
    series = overlap_series(
        F1, F2, alpha, mp.n_kicks,
        convention=cfg["convention"],
        singular_threshold=cfg["singular_threshold"],
        warn_at=cfg["leak_warn"],
        error_at=cfg["leak_error"],
    )
    path = out / "overlap.csv"
    series.to_csv(path)
    half = mp.n_kicks // 2
    below = np.nonzero(series.O < 0.5)[0]
    summary = {
        "fock_dim": mp.fock_dim,
        "rows": len(series),
        "mean_O_second_half": float(series.O[half:].mean()),
        "first_kick_O_below_half": int(below[0]) if below.size else None,
        "max_leakage": float(series.leakage.max()),
        "singular_kicks": int(np.isnan(series.O_reconstructed).sum()),
    }
    return [path], summary


def cmd_qavg(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    alpha = _alpha(cfg)
    mp = _model(cfg, alpha)
    F = floquet(mp.kappa1, mp.eta, mp.theta, mp.fock_dim)
    spec = QGridSpec.square(cfg["extent"], cfg["resolution"])
    grid, pops = time_averaged_q(
        F, alpha, mp.n_kicks, cfg["stride"], spec, warn_at=cfg["leak_warn"], error_at=cfg["leak_error"]
    )
    paths = [out / "qavg.csv", out / "qavg.pgm"]
    grid.to_csv(paths[0])
    write_pgm(paths[1], grid.values, scale="linear")
    summary = {
        "fock_dim": mp.fock_dim,
        "masked_cells": grid.masked,
        "grid_mass": grid.mass(),
        "grid_mass_outside_ring": grid.mass_outside(cfg["ring_radius"]),
        "exact_mass_outside_ring": radial_mass_outside(pops, mp.eta, cfg["ring_radius"]),
    }
    return paths, summary


def correspondence_table(cfg: Config) -> tuple[np.ndarray, int]:
    """Rows ``(n, Xq, Pq, Xc, Pc, rel_dev)``; ``rel_dev`` is the largest of
    ``|dX|``, ``|dP|`` divided by the classical radius."""
    alpha = _alpha(cfg)
    mp = _model(cfg, alpha)
    F = floquet(mp.kappa1, mp.eta, mp.theta, mp.fock_dim)
    cmap = ClassicalMap.from_kappa(mp.kappa1, mp.theta)
    pp0 = phasepoint_from_alpha(alpha, mp.eta)
    cl = orbits([pp0], cmap, mp.n_kicks)[0]
    rows = []
    for k, psi in enumerate(iter_evolve(F, coherent_state(alpha, mp.fock_dim), mp.n_kicks)):
        Xq, Pq = expectation_XP(psi, mp.eta)
        Xc, Pc = cl[k]
        rc = math.hypot(Xc, Pc)
        dev = max(abs(Xq - Xc), abs(Pq - Pc)) / rc if rc > 0 else math.hypot(Xq, Pq)
        rows.append((k, Xq, Pq, Xc, Pc, dev))
    return np.array(rows), mp.fock_dim


def cmd_correspondence(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    table, dim = correspondence_table(cfg)
    path = out / "correspondence.csv"
    with open(path, "w", newline="") as fh:
        fh.write("n,X_quantum,P_quantum,X_classical,P_classical,rel_dev\n")
        for row in table:
            fh.write(f"{int(row[0])}," + ",".join(f"{v:.17g}" for v in row[1:]) + "\n")
    worst = float(table[:, 5].max())
    print(f"{'n':>4} {'X_q':>12} {'P_q':>12} {'X_c':>12} {'P_c':>12} {'rel_dev':>10}")
    for row in table:
        print(f"{int(row[0]):>4} " + " ".join(f"{v:>12.6f}" for v in row[1:5]) + f" {row[5]:>10.2e}")
    verdict = "PASS" if worst < cfg["tolerance"] else "FAIL"
    print(f"max relative deviation {worst:.3e} vs bound {cfg['tolerance']:g}: {verdict}")
    return [path], {"fock_dim": dim, "max_rel_dev": worst, "pass": worst < cfg["tolerance"]}


def cmd_convert(cfg: Config, out: Path) -> tuple[list[Path], dict]:
    phys = PhysicalParams(
        rabi=cfg["physical.rabi"],
        detuning=cfg["physical.detuning"],
        pulse_width=cfg["physical.pulse_width"],
        mass=cfg["physical.mass"],
        trap_freq=cfg["physical.trap_freq"],
        wavenumber=cfg["physical.wavenumber"],
    )
    ks = kappa_from_physical(phys, cfg["physical.max_rabi_ratio"], cfg["physical.min_width_detuning"])
    check = math.sqrt(2.0) * ks.eta**2 * ks.K / HBAR
    report = {
        "eta": ks.eta,
        "kappa": ks.kappa,
        "K": ks.K,
        "kappa_from_K": check,
        "rabi_over_detuning": abs(phys.rabi / phys.detuning),
        "width_times_detuning": phys.pulse_width * abs(phys.detuning),
    }
    for k, v in report.items():
        print(f"{k:>22} = {v:.10g}")
    path = out / "convert.json"
    write_json(path, report)
    return [path], report


COMMANDS = {
    "web": (cmd_web, "classical stochastic-web histogram (CSV + PGM)"),
    "evolve": (cmd_evolve, "evolve a coherent state; centroid trajectory and final state CSV"),
    "overlap": (cmd_overlap, "Peres overlap and Ramsey probabilities CSV"),
    "qavg": (cmd_qavg, "time-averaged Husimi Q function (CSV + PGM)"),
    "correspondence": (cmd_correspondence, "quantum centroid versus classical orbit"),
    "convert": (cmd_convert, "physical ion-trap parameters to (eta, kappa)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dkho", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dkho {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value file or a previous manifest.json")
        p.add_argument("--out", default=f"dkho-{name}", help="output directory")
        grp = p.add_argument_group("parameters")
        for key in KEYS:
            grp.add_argument(flag_name(key.name), dest=key.name, default=None, metavar="V", help=key.help)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    flags = {k.name: getattr(args, k.name) for k in KEYS}
    t0 = time.perf_counter()
    try:
        cfg = resolve(args.config, flags)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TruncationWarning)
            paths, summary = func(cfg, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (ConfigError, InvalidResonanceError, AdiabaticValidityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationError, ConsistencyError, NotPeriodicError, SingularKickIndexError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DKHOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = {
        "command": args.command,
        "params": cfg.resolved(),
        "outputs": [{"path": str(p.relative_to(out)), "sha256": sha256(p)} for p in paths],
        "version": __version__,
        "backend": kernels.DEFAULT_BACKEND,
        "duration_s": round(time.perf_counter() - t0, 3),
        "summary": summary,
        "warnings": [str(w.message) for w in caught],
    }
    write_json(out / "manifest.json", manifest)
    if args.command != "convert":
        for k, v in summary.items():
            print(f"{k}: {v}")
    print(f"wrote {len(paths)} file(s) + manifest.json to {out}")
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
