"""Command-line interface: sweeps, design search, and RB budgets.

Exit codes: 0 success, 2 usage/config error, 3 numerical failure. Outputs
are byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import perturbative, rb, spectrum
from .circuit import derive_junction_energies, load_params
from .constants import FF, NH
from .errors import (
    BracketError,
    ConfigError,
    FitError,
    LabelingError,
    ModelError,
    NumericsError,
    ParameterError,
)
from .hamiltonian import ChargeBasisConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def parse_grid(text: str) -> np.ndarray:
    """Parse 'start:stop:count' (inclusive endpoints) or a single value."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 1:
                raise ValueError
            return np.linspace(start, stop, count)
    except ValueError:
        pass
    raise ConfigError(f"malformed grid {text!r}; expected 'start:stop:count' or a single value")


def _parse_bracket(text: str) -> tuple[float, float]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"malformed bracket {text!r}; expected 'lo:hi'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"malformed bracket {text!r}; expected 'lo:hi'") from None
    return lo, hi


def golden_section_min(func, lo: float, hi: float, *, tol: float = 0.05, max_iter: int = 200):
    """Golden-section minimum of a unimodal function on [lo, hi].

    Raises BracketError when the minimizer lands on an endpoint, which means
    the bracket does not contain the interior minimum.
    """
    if not lo < hi:
        raise ConfigError(f"bracket must satisfy lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = func(x1), func(x2)
    iterations = 0
    while (b - a) > tol and iterations < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = func(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = func(x2)
        iterations += 1
    x_min, f_min = (x1, f1) if f1 <= f2 else (x2, f2)
    edge = tol + (hi - lo) * 1e-3
    if x_min - lo < edge or hi - x_min < edge:
        raise BracketError(
            f"minimum sits at the bracket edge ({x_min:.3f} in [{lo}, {hi}]); widen the bracket"
        )
    return x_min, f_min


def _basis_config(args) -> ChargeBasisConfig:
    return ChargeBasisConfig(n_max=args.n_max, num_eigenstates=args.k)


def _add_common(parser):
    parser.add_argument("--params", required=True, help="circuit parameter JSON file")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--n-max", type=int, default=7, dest="n_max")
    parser.add_argument("--k", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)


def _report_failures(points, label):
    failed = [p for p in points if p.error is not None]
    for point in failed:
        where = getattr(point, "phi_ex", None)
        if where is None:
            where = point.c34_ff
        print(f"failed at {label}={where}: {point.error}", file=sys.stderr)
    return len(failed)


def cmd_spectrum(args) -> int:
    params = load_params(args.params)
    grid = parse_grid(args.flux_grid)
    if args.out is None:
        raise ConfigError("--out is required for spectrum output")
    points = spectrum.sweep_flux(params, grid, _basis_config(args), seed=args.seed)
    spectrum.write_spectrum_csv(points, args.out)
    zetas = [p.zeta_khz for p in points if p.zeta_khz is not None]
    if zetas:
        print(f"zeta/2pi range: min {min(zetas):.3f} kHz, max {max(zetas):.3f} kHz")
    failed = _report_failures(points, "phi_ex")
    return EXIT_NUMERICAL if failed > 0.1 * len(points) else EXIT_OK


def cmd_zz(args) -> int:
    params = load_params(args.params)
    if (args.flux_grid is None) == (args.c34_grid is None):
        raise ConfigError("exactly one of --flux-grid or --c34-grid is required")
    if args.out is None:
        raise ConfigError("--out is required for zz output")
    cfg = _basis_config(args)
    if args.flux_grid is not None:
        points = spectrum.sweep_flux(params, parse_grid(args.flux_grid), cfg, seed=args.seed)
        spectrum.write_flux_zz_csv(points, args.out)
        label = "phi_ex"
    else:
        points = spectrum.sweep_c34(
            params,
            parse_grid(args.c34_grid),
            args.flux,
            cfg,
            zero_parasitics=args.zero_parasitics,
            seed=args.seed,
        )
        spectrum.write_c34_zz_csv(points, args.out)
        label = "C34_fF"
    zetas = [p.zeta_khz for p in points if p.zeta_khz is not None]
    if zetas:
        print(f"zeta/2pi range: min {min(zetas):.3f} kHz, max {max(zetas):.3f} kHz")
    failed = _report_failures(points, label)
    return EXIT_NUMERICAL if failed > 0.1 * len(points) else EXIT_OK


def cmd_design(args) -> int:
    params = load_params(args.params).without_parasitics()
    lj5_h = derive_junction_energies(params).lj5_nh * NH

    if args.formula_only:
        # single closed-form evaluation at the configured C34, no iteration
        result = perturbative.two_mode_reduction(params)
        c34_star = perturbative.shunt_capacitance_for(lj5_h, result.omega1, result.omega2) / FF
        doc = {
            "c34_star_fF": c34_star,
            "g12_residual": None,
            "zeta_at_star_kHz": None,
            "argmin_c34_exact_fF": None,
        }
    else:
        fixed_point = perturbative.zero_coupling_c34(params)
        cfg = _basis_config(args)

        def abs_zeta(c34_ff: float) -> float:
            trial = params.with_c34(c34_ff)
            return abs(spectrum.zz_interaction(trial, 0.0, cfg, seed=args.seed).zeta_khz)

        lo, hi = _parse_bracket(args.bracket)
        argmin, _ = golden_section_min(abs_zeta, lo, hi, tol=args.bracket_tol)
        zeta_at_star = spectrum.zz_interaction(
            params.with_c34(fixed_point.c34_star_ff), 0.0, cfg, seed=args.seed
        ).zeta_khz
        doc = {
            "c34_star_fF": fixed_point.c34_star_ff,
            "g12_residual": fixed_point.g12_residual,
            "zeta_at_star_kHz": zeta_at_star,
            "argmin_c34_exact_fF": argmin,
        }

    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_TRACE_SLOTS = ("x1_srb", "x1_irb", "purity_srb", "purity_irb", "p0000_srb", "p0000_irb")


def cmd_rb_budget(args) -> int:
    traces = {}
    paths = {}
    for slot in _TRACE_SLOTS:
        path = getattr(args, slot)
        if path is None:
            continue
        try:
            trace = rb.read_trace_csv(path)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"trace file {path} for slot {slot}: {exc}") from exc
        kind, variant = rb.SLOT_EXPECTATIONS[slot]
        if trace.kind != kind or trace.variant != variant:
            raise ConfigError(
                f"trace file {path}: slot {slot} requires kind={kind} variant={variant}, "
                f"got kind={trace.kind} variant={trace.variant}"
            )
        traces[slot] = trace
        paths[slot] = path
    if not traces:
        raise ConfigError("no trace files given")
    missing = set(_TRACE_SLOTS) - set(traces)
    if missing and not args.partial:
        raise ConfigError(f"missing traces for {sorted(missing)}; pass --partial for a partial budget")
    try:
        budget = rb.full_budget(traces, d=args.d, allow_partial=args.partial)
    except ValueError as exc:
        listing = ", ".join(f"{slot}={path}" for slot, path in sorted(paths.items()))
        raise ConfigError(f"{exc} (files: {listing})") from exc
    text = json.dumps(rb.budget_to_dict(budget), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csdtc", description="Coupler spectra, ZZ sweeps and RB budgets")
    sub = parser.add_subparsers(dest="command", required=True)

    p_spec = sub.add_parser("spectrum", help="flux sweep of the labeled computational levels")
    _add_common(p_spec)
    p_spec.add_argument("--flux-grid", default="-0.5:0.5:101")
    p_spec.set_defaults(func=cmd_spectrum)

    for name, help_text in (
        ("zz", "zeta versus flux or versus the shunt capacitance"),
        ("pert-compare", "alias of zz over a C34 grid with both zeta columns"),
    ):
        p_zz = sub.add_parser(name, help=help_text)
        _add_common(p_zz)
        p_zz.add_argument("--flux-grid", default=None)
        p_zz.add_argument("--c34-grid", default=None)
        p_zz.add_argument("--flux", type=float, default=0.0, help="flux for C34 sweeps")
        p_zz.add_argument("--zero-parasitics", action="store_true")
        p_zz.set_defaults(func=cmd_zz)

    p_design = sub.add_parser("design", help="decoupling C34 from the fixed point and from |zeta| argmin")
    _add_common(p_design)
    p_design.add_argument("--bracket", default="10:90", help="C34 bracket 'lo:hi' in fF for the argmin search")
    p_design.add_argument("--bracket-tol", type=float, default=0.05, dest="bracket_tol")
    p_design.add_argument("--formula-only", action="store_true", help="closed form 1/(LJ5 w1 w2) only")
    p_design.set_defaults(func=cmd_design)

    p_rb = sub.add_parser("rb-budget", help="CZ error budget from decay-trace CSVs")
    for slot in _TRACE_SLOTS:
        p_rb.add_argument(f"--{slot.replace('_', '-')}", dest=slot, default=None)
    p_rb.add_argument("--d", type=int, default=4)
    p_rb.add_argument("--partial", action="store_true")
    p_rb.add_argument("--out", default=None)
    p_rb.set_defaults(func=cmd_rb_budget)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (NumericsError, LabelingError, ModelError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ParameterError, ConfigError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
