"""Batch command-line front end.

Usage:

    resolvent-kit <command> [--config FILE] [overrides...]
    resolvent-kit run CONFIG [overrides...]      # command taken from the file

Commands: smatrix, resonances, bound-states, dos, resolvent, selftest.
Each run writes a CSV table (one row per grid point) and a JSON summary
with top-level keys config, results, diagnostics, version. Exit codes:
0 success, 1 configuration or expression error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json as json_mod
import sys

import numpy as np

from . import __version__
from .analysis import (
    ScanTable,
    bound_states,
    density_of_states,
    find_resonances,
    locate_resonances,
    scan_smatrix,
)
from .basis import BasisSpec, SystemSpec, build_matrices
from .config import COMMANDS, RunConfig, build_config, parse_config_file
from .errors import ConfigError, InputError, NumericalError, ResolventKitError
from .matrix_core import gen_sym_eig
from .potential import parse_potential
from .scattering import ScatteringCalculator


def _format_value(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: str, energies, columns: dict, energy_header: str = "E_au"):
    """Numeric CSV: header row, comma separators, 17 significant digits,
    LF line endings. Every value re-parses to the exact double written."""
    names = [energy_header] + list(columns)
    arrays = [np.asarray(energies)] + [np.asarray(c) for c in columns.values()]
    lines = [",".join(names)]
    for i in range(arrays[0].size):
        lines.append(",".join(_format_value(a[i]) for a in arrays))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, config: RunConfig, results: dict, diagnostics: dict):
    payload = {
        "config": config.as_dict(),
        "results": results,
        "diagnostics": diagnostics,
        "version": __version__,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json_mod.dump(payload, fh, indent=2)
        fh.write("\n")


def write_gnuplot(path: str, csv_path: str, ycolumns, title: str):
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 'E (atomic units)'",
        "plot " + ", \\\n     ".join(f"'{csv_path}' using 1:{i} with lines" for i in ycolumns),
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _system_from_config(cfg: RunConfig) -> SystemSpec:
    potential = parse_potential(cfg.potential) if cfg.potential.strip() else None
    basis = BasisSpec(family=cfg.family, lam=cfg.lam, ell=cfg.ell, size=cfg.size)
    return SystemSpec(basis=basis, z_charge=cfg.z_charge, potential=potential, range_r=cfg.range_r)


def _grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.e_min, cfg.e_max, cfg.steps + 1)


def _peak_records(report):
    return [
        {"energy": p.e_peak, "width_estimate": p.width_estimate, "quality": p.quality}
        for p in report.peaks
    ]


def _scan_results(table: ScanTable) -> dict:
    finite = np.isfinite(table.columns["abs_one_minus_s"])
    s_mag = np.hypot(table.columns["re_s"][finite], table.columns["im_s"][finite])
    return {
        "points": int(table.size),
        "max_unitarity_deviation": float(np.max(np.abs(s_mag - 1.0))) if finite.any() else None,
    }


def cmd_smatrix(cfg: RunConfig) -> tuple:
    table = scan_smatrix(_system_from_config(cfg), _grid(cfg), threads=cfg.effective_threads())
    results = _scan_results(table)
    report = find_resonances(table, prominence=cfg.prominence)
    results["resonances"] = _peak_records(report)
    return table, results, {"flagged_points": list(table.flagged)}, (2, 3, 4, 5)


def cmd_resonances(cfg: RunConfig) -> tuple:
    system = _system_from_config(cfg)
    calc = ScatteringCalculator(system)
    table = scan_smatrix(calc, _grid(cfg), threads=cfg.effective_threads())
    report = locate_resonances(
        calc, cfg.e_min, cfg.e_max, coarse_steps=cfg.steps, min_phase_gain=cfg.min_phase_gain
    )
    results = _scan_results(table)
    results["resonances"] = _peak_records(report)
    diags = {
        "flagged_points": list(table.flagged),
        "eigenvalues_in_range": [
            float(e) for e in calc.eigenvalues if cfg.e_min < e < cfg.e_max
        ],
    }
    return table, results, diags, (2, 3, 4, 5)


def cmd_bound_states(cfg: RunConfig) -> tuple:
    system = _system_from_config(cfg)
    grid = None
    if cfg.e_min < 0:
        grid = np.linspace(cfg.e_min, min(cfg.e_max, -1e-3), cfg.steps + 1)
    result = bound_states(system, grid=grid)
    results = {"bound_states": [float(e) for e in result.energies]}
    return result.scan, results, {"flagged_points": list(result.scan.flagged)}, (2,)


def cmd_dos(cfg: RunConfig) -> tuple:
    system = _system_from_config(cfg)
    table = density_of_states(
        system,
        _grid(cfg),
        method=cfg.method,
        delta=cfg.delta,
        fit_height=cfg.fit_height,
        fit_order=cfg.fit_order,
        fit_threshold=cfg.fit_threshold,
    )
    rho = table.columns["rho"]
    results = {
        "method": cfg.method,
        "total_weight": table.metadata.get("total_weight"),
        "rho_max": float(np.max(rho)),
        "rho_max_energy": float(table.energies[int(np.argmax(rho))]),
    }
    for key in ("delta", "fit_residual"):
        if key in table.metadata:
            results[key] = float(table.metadata[key])
    return table, results, {}, (2,)


def cmd_resolvent(cfg: RunConfig) -> tuple:
    system = _system_from_config(cfg)
    mats = build_matrices(system)
    pair = gen_sym_eig(mats.h.data, mats.omega.data)
    n = cfg.n_index if cfg.n_index is not None else cfg.size - 1
    m = cfg.m_index if cfg.m_index is not None else cfg.size - 1
    if not (0 <= n < cfg.size and 0 <= m < cfg.size):
        raise ConfigError(f"matrix element indices ({n}, {m}) out of range for N={cfg.size}")
    grid = _grid(cfg)
    weights = pair.gamma[n] * pair.gamma[m] / pair.sigma
    values = np.array(
        [np.sum(weights / (pair.eps - (e + 1j * cfg.im_z))) for e in grid], dtype=complex
    )
    table = ScanTable(
        energies=grid,
        columns={"re_g": values.real, "im_g": values.imag, "abs_g": np.abs(values)},
        metadata={"kind": "resolvent"},
    )
    results = {
        "n_index": n,
        "m_index": m,
        "im_z": cfg.im_z,
        "poles_in_range": [float(e) for e in pair.eps if grid[0] <= e <= grid[-1]],
    }
    return table, results, {}, (2, 3, 4)


_SELFTEST_TOL = 1e-9


def _selftest_checks():
    rng = np.random.RandomState(7)

    def formula_equivalence():
        from .resolvent import ResolventInput, green_cofactor, green_spectral, inverse_oracle

        a = rng.randn(6, 6)
        h = 0.5 * (a + a.T)
        b = rng.randn(6, 6)
        om = b @ b.T + 6.0 * np.eye(6)
        inp = ResolventInput(h=h, omega=om, z=0.37 + 0.21j)
        inv = inverse_oracle(inp)
        worst = 0.0
        for n in range(6):
            for m in range(6):
                gs = green_spectral(inp, n, m)
                gc = green_cofactor(inp, n, m)
                worst = max(worst, abs(gs - inv[n, m]), abs(gc - inv[n, m]))
        return worst / np.max(np.abs(inv))

    def quadrature_moment():
        from .basis import gauss_quadrature

        nodes, weights = gauss_quadrature(0.0, 3)
        return abs(np.sum(weights * nodes**5) - 120.0) / 120.0

    def free_particle():
        spec = SystemSpec(basis=BasisSpec("laguerre", lam=1.0, ell=0, size=20))
        calc = ScatteringCalculator(spec)
        return max(abs(1.0 - calc.point(e).s) for e in np.linspace(0.3, 4.0, 7))

    def hydrogen_ground_state():
        spec = SystemSpec(basis=BasisSpec("laguerre", lam=2.0, ell=0, size=8), z_charge=-1.0)
        mats = build_matrices(spec)
        pair = gen_sym_eig(mats.h.data, mats.omega.data)
        return abs(pair.eps[0] + 0.5)

    def eigvec_identity():
        from .resolvent import eigvec_sq_from_eigs

        a = rng.randn(6, 6)
        h = 0.5 * (a + a.T)
        _, gamma = np.linalg.eigh(h)
        worst = 0.0
        for n in range(6):
            for k in range(6):
                worst = max(worst, abs(eigvec_sq_from_eigs(h, n, k) - gamma[n, k] ** 2))
        return worst

    return [
        ("formula_equivalence", formula_equivalence),
        ("quadrature_moment", quadrature_moment),
        ("free_particle_null", free_particle),
        ("hydrogen_ground_state", hydrogen_ground_state),
        ("eigvec_from_eigenvalues", eigvec_identity),
    ]


def cmd_selftest(_cfg: RunConfig) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            deviation = float(check())
        except ResolventKitError as exc:
            print(f"FAIL {name}: {exc}")
            failures += 1
            continue
        status = "ok" if deviation <= _SELFTEST_TOL else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"{status:4s} {name}: deviation {deviation:.3e}")
    return 0 if failures == 0 else 2


_GNUPLOT_TITLES = {
    "smatrix": "scattering matrix scan",
    "resonances": "scattering matrix scan",
    "bound-states": "resolvent magnitude",
    "dos": "density of states",
    "resolvent": "resolvent element",
}

_COMMAND_IMPL = {
    "smatrix": cmd_smatrix,
    "resonances": cmd_resonances,
    "bound-states": cmd_bound_states,
    "dos": cmd_dos,
    "resolvent": cmd_resolvent,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract reserves 2
    # for numerical failures and 1 for bad input.
    def error(self, message):
        raise ConfigError(message)


def _build_argparser() -> _Parser:
    parser = _Parser(prog="resolvent-kit", description=__doc__, add_help=True)
    parser.add_argument("command", choices=COMMANDS + ("run",))
    parser.add_argument("config_positional", nargs="?", default=None, metavar="CONFIG",
                        help="config file (required for 'run')")
    parser.add_argument("--config", dest="config_flag", default=None, help="config file")
    parser.add_argument("--family", choices=("laguerre", "oscillator"))
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--ell", type=int)
    parser.add_argument("--Z", dest="z_charge", type=float)
    parser.add_argument("--N", dest="size", type=int)
    parser.add_argument("--potential", type=str)
    parser.add_argument("--e-min", dest="e_min", type=float)
    parser.add_argument("--e-max", dest="e_max", type=float)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--method", choices=("smoothing", "continuation"))
    parser.add_argument("--delta", type=float)
    parser.add_argument("--fit-height", dest="fit_height", type=float)
    parser.add_argument("--fit-order", dest="fit_order", type=int)
    parser.add_argument("--fit-threshold", dest="fit_threshold", type=float)
    parser.add_argument("--n-index", dest="n_index", type=int)
    parser.add_argument("--m-index", dest="m_index", type=int)
    parser.add_argument("--im-z", dest="im_z", type=float)
    parser.add_argument("--prominence", type=float)
    parser.add_argument("--min-phase-gain", dest="min_phase_gain", type=float)
    parser.add_argument("--range-r", dest="range_r", type=float)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--csv", type=str)
    parser.add_argument("--json", type=str)
    parser.add_argument("--gnuplot-script", dest="gnuplot_script", type=str)
    parser.add_argument("--version", action="version", version=__version__)
    return parser


_CLI_FIELDS = (
    "family", "lam", "ell", "z_charge", "size", "potential", "e_min", "e_max",
    "steps", "method", "delta", "fit_height", "fit_order", "fit_threshold",
    "n_index", "m_index", "im_z", "prominence", "min_phase_gain", "range_r",
    "threads", "csv", "json", "gnuplot_script",
)


def main(argv=None) -> int:
    try:
        args = _build_argparser().parse_args(argv)
        config_path = args.config_flag or args.config_positional
        file_overrides = parse_config_file(config_path) if config_path else {}
        cli_overrides = {name: getattr(args, name) for name in _CLI_FIELDS}
        if args.command == "run":
            if not config_path:
                raise ConfigError("'run' needs a config file")
        else:
            cli_overrides["command"] = args.command
        cfg = build_config(file_overrides, cli_overrides)
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if cfg.command == "selftest":
        return cmd_selftest(cfg)

    try:
        table, results, diagnostics, plot_cols = _COMMAND_IMPL[cfg.command](cfg)
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        kind = type(exc).__name__
        print(f"numerical error in {cfg.command} ({kind}): {exc}", file=sys.stderr)
        return 2

    write_csv(cfg.csv, table.energies, table.columns)
    write_json(cfg.json, cfg, results, diagnostics)
    if cfg.gnuplot_script:
        write_gnuplot(cfg.gnuplot_script, cfg.csv, plot_cols, _GNUPLOT_TITLES[cfg.command])
    print(f"{cfg.command}: wrote {cfg.csv} and {cfg.json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
