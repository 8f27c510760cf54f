"""Command-line front end.

Every subcommand writes a CSV (or JSON) artifact whose header records
the package version, the resolved parameters, and the seed, so a run is
reproducible from its own output.  Exit codes: 0 success, 2 usage error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    eta,
    eta_d,
    eta_isi,
    normalized_aliasing,
    sir_from_rho,
)
from .fitting import fit_composite, fit_single
from .linksim import LinkConfig, simulate_link
from .params import CompositeModel, OscillatorParams, ThreeGppParams
from .pointsio import load_points
from .psd import composite_psd, phasor_psd, pn_autocorr, phasor_autocorr, threegpp_psd
from .spectral import db, undb, welch_psd, compare_psd
from .timegen import gen_composite, save_stream_bin, save_stream_csv


# ---------------------------------------------------------------------------
# output helpers

class OutputWriter:
    def __init__(self, path: str | None, fmt: str, meta: dict):
        self.path = path
        self.fmt = fmt
        self.meta = meta

    def write(self, columns: list[str], rows: list[list]) -> None:
        if self.fmt == "json":
            text = json.dumps({"meta": self.meta, "columns": columns,
                               "rows": rows}, indent=2, sort_keys=True) + "\n"
        else:
            lines = [f"# {k}={v}" for k, v in sorted(self.meta.items())]
            lines.append(",".join(columns))
            for row in rows:
                lines.append(",".join(_cell(v) for v in row))
            text = "\n".join(lines) + "\n"
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w") as fh:
                fh.write(text)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _meta(args, **extra) -> dict:
    resolved = {k: v for k, v in sorted(vars(args).items())
                if k not in ("func", "output", "format") and v is not None}
    meta = {"tool": "phasenoise", "version": __version__,
            "subcommand": args.subcommand,
            "resolved_args": json.dumps(resolved, sort_keys=True)}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# model flags

def _add_model_flags(p: argparse.ArgumentParser, threegpp: bool = False) -> None:
    p.add_argument("--f3db", type=float, help="corner frequency, Hz (0 = free-running)")
    p.add_argument("--l100-db", type=float, help="level at the reference offset, dB")
    p.add_argument("--linf-db", type=float, default=None, help="floor level, dB")
    p.add_argument("--f-ref", type=float, default=1e5, help="reference offset, Hz")
    p.add_argument("--process", action="append", default=None, metavar="F3DB,L100DB[,LINFDB]",
                   help="composite member (repeatable); overrides the single flags")
    if threegpp:
        p.add_argument("--threegpp-psd0-db", type=float, default=None,
                       help="multi-pole/zero model: PSD0 level, dB")
        p.add_argument("--threegpp-zero", action="append", default=None,
                       metavar="FREQ,EXP", help="zero (repeatable)")
        p.add_argument("--threegpp-pole", action="append", default=None,
                       metavar="FREQ,EXP", help="pole (repeatable)")


def _parse_model(args) -> CompositeModel:
    if args.process:
        members = []
        for spec_str in args.process:
            parts = [float(x) for x in spec_str.split(",")]
            if len(parts) not in (2, 3):
                raise ValueError(f"--process needs F3DB,L100DB[,LINFDB]: {spec_str!r}")
            linf = parts[2] if len(parts) == 3 else None
            members.append(OscillatorParams.from_db(parts[0], parts[1], linf,
                                                    f_ref=args.f_ref))
        return CompositeModel(tuple(members))
    if args.f3db is None or args.l100_db is None:
        raise ValueError("model required: --f3db/--l100-db or --process")
    return CompositeModel((OscillatorParams.from_db(
        args.f3db, args.l100_db, args.linf_db, f_ref=args.f_ref),))


def _parse_threegpp(args) -> ThreeGppParams | None:
    if getattr(args, "threegpp_psd0_db", None) is None:
        return None
    if not args.threegpp_zero or not args.threegpp_pole:
        raise ValueError("--threegpp-psd0-db needs --threegpp-zero and --threegpp-pole")

    def pairs(items):
        return tuple(tuple(float(x) for x in it.split(",")) for it in items)

    return ThreeGppParams(psd0=undb(args.threegpp_psd0_db),
                          zeros=pairs(args.threegpp_zero),
                          poles=pairs(args.threegpp_pole))


def _model_meta(model: CompositeModel) -> str:
    return ";".join(
        f"f3db={p.f3db:g},l100_db={db(p.l100_sq):.6g}"
        + (f",linf_db={db(p.linf_sq):.6g}" if p.linf_sq > 0 else "")
        for p in model.processes)


def _log_grid(fmin: float, fmax: float, n: int) -> np.ndarray:
    if not (fmax >= fmin > 0):
        raise ValueError("need 0 < fmin <= fmax")
    return np.logspace(math.log10(fmin), math.log10(fmax), n)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_psd(args) -> int:
    tg = _parse_threegpp(args)
    if tg is not None:
        model_desc = f"threegpp,psd0_db={args.threegpp_psd0_db:g}"
        evaluate = lambda f: threegpp_psd(tg, f)
    else:
        model = _parse_model(args)
        model_desc = _model_meta(model)
        evaluate = lambda f: composite_psd(model, f)
    meta = _meta(args, model=model_desc)
    columns = ["freq_hz", "psd_db"]
    if args.points:
        pts = load_points(args.points)
        freqs = pts[:, 0]
        columns.append("points_db")
        rows = [[float(f), float(db(evaluate(f))), float(lv)]
                for f, lv in zip(freqs, pts[:, 1])]
    else:
        freqs = _log_grid(args.fmin, args.fmax, args.n)
        rows = [[float(f), float(db(evaluate(f)))] for f in freqs]
    if args.phasor:
        if tg is not None:
            raise ValueError("--phasor applies to oscillator models only")
        p0 = model.processes[0]
        if len(model.processes) != 1 or p0.linf_sq != 0:
            raise ValueError("--phasor needs a single floorless process")
        vals = phasor_psd(p0, np.asarray([r[0] for r in rows]))
        meta["phasor_delta_weight"] = repr(float(vals.delta_weight))
        columns.append("phasor_db")
        for row, c in zip(rows, np.atleast_1d(vals.continuous)):
            row.append(float(db(c)))
    OutputWriter(args.output, args.format, meta).write(columns, rows)
    return 0


def _cmd_autocorr(args) -> int:
    model = _parse_model(args)
    if len(model.processes) != 1:
        raise ValueError("autocorr works on a single process")
    p = model.processes[0]
    taus = _log_grid(args.tau_min, args.tau_max, args.n)
    rows = []
    for t in taus:
        r_pn = pn_autocorr(p, t) if p.f3db > 0 else float("nan")
        rows.append([float(t), float(r_pn), float(phasor_autocorr(p, t))])
    meta = _meta(args, model=_model_meta(model))
    OutputWriter(args.output, args.format, meta).write(
        ["tau_s", "pn_autocorr_rad2", "phasor_autocorr"], rows)
    return 0


def _cmd_gen(args) -> int:
    model = _parse_model(args)
    stream = gen_composite(model, args.ts, args.n, args.seed)
    if args.binary:
        if args.output in (None, "-"):
            raise ValueError("--binary needs --output PATH")
        save_stream_bin(stream, args.output)
    elif args.output in (None, "-"):
        sys.stdout.write(f"# tool=phasenoise\n# version={__version__}\n"
                         f"# model={_model_meta(model)}\n"
                         f"# ts={args.ts!r}\n# seed={args.seed}\n")
        sys.stdout.write("k,theta_rad\n")
        for k, th in enumerate(stream.samples):
            sys.stdout.write(f"{k},{float(th)!r}\n")
    else:
        save_stream_csv(stream, args.output)
    return 0


def _cmd_validate(args) -> int:
    model = _parse_model(args)
    stream = gen_composite(model, args.ts, args.n, args.seed)
    import warnings as _warnings
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")  # slow corners flag the estimate
        est = welch_psd(stream.samples, fs=1.0 / args.ts,
                        segment_len=args.segment_len)
    band = (10 * est.resolution, args.band_top_fraction / args.ts)
    cmp = compare_psd(est, lambda f: composite_psd(model, f), band=band)
    meta = _meta(args, model=_model_meta(model), seed=args.seed, ts=repr(args.ts),
                 n=args.n, segment_len=args.segment_len,
                 band_hz=f"{band[0]:g}:{band[1]:g}",
                 max_dev_db=f"{cmp.max_dev_db:.4f}",
                 rms_dev_db=f"{cmp.rms_dev_db:.4f}",
                 nonstationary=str(est.nonstationary))
    rows = [[float(f), float(e), float(m), float(d)]
            for f, e, m, d in zip(cmp.freqs, cmp.est_db, cmp.model_db, cmp.dev_db)]
    OutputWriter(args.output, args.format, meta).write(
        ["freq_hz", "est_db", "model_db", "dev_db"], rows)
    return 0


def _parse_sweep(text: str, default_n: int = 25) -> np.ndarray:
    parts = text.split(":")
    if len(parts) == 2:
        lo, hi, n = float(parts[0]), float(parts[1]), default_n
    elif len(parts) == 3:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        raise ValueError(f"sweep must be LO:HI[:N], got {text!r}")
    return _log_grid(lo, hi, n)


def _cmd_errors(args) -> int:
    if args.sweep_rho:
        rhos = _parse_sweep(args.sweep_rho)
        f3db = None
    else:
        if args.l100_db is None or args.ts is None:
            raise ValueError("need --sweep-rho or --l100-db with --ts")
        rhos = np.array([math.pi * args.f_ref ** 2 * undb(args.l100_db) * args.ts])
        f3db = args.f3db
    columns = ["rho", "eta", "eta_d", "eta_isi", "sir_db"]
    # the aliasing column is the power-normalized ratio, not the absolute
    # variance; it needs the corner frequency
    with_alias = f3db is not None and f3db > 0 and args.ts is not None
    if with_alias:
        columns.append("alias_normalized")
        params = OscillatorParams.from_db(f3db, args.l100_db, f_ref=args.f_ref)
    rows = []
    for r in rhos:
        row = [float(r), eta(r), eta_d(r), eta_isi(r),
               10.0 * math.log10(sir_from_rho(r))]
        if with_alias:
            row.append(normalized_aliasing(params, args.ts))
        rows.append(row)
    OutputWriter(args.output, args.format, _meta(args)).write(columns, rows)
    return 0


def _cmd_sir(args) -> int:
    rhos = _parse_sweep(args.sweep_rho, default_n=7) if args.sweep_rho \
        else np.asarray([float(x) for x in args.rho.split(",")])
    rolloffs = [float(x) for x in args.rolloffs.split(",")]
    rows = []
    for r in rhos:
        closed_db = 10.0 * math.log10(sir_from_rho(float(r)))
        for beta in rolloffs:
            span = max(args.span, int(round(4.8 / max(beta, 0.05))))
            l100 = float(r) / (math.pi * 1e10 * args.ts)
            cfg = LinkConfig(constellation="qpsk", rolloff=beta, osf=args.osf,
                             n_symbols=args.n_symbols, ts=args.ts, pn_mode="ct",
                             pn_model=OscillatorParams(f3db=0.0, l100_sq=l100),
                             esn0_db=None, pilot_len=0, seed=args.seed,
                             filter_span=span)
            stats = simulate_link(cfg)
            rows.append([float(r), stats.sir_db, stats.sir_se_db, beta, closed_db])
    meta = _meta(args, seed=args.seed, n_symbols=args.n_symbols, osf=args.osf,
                 ts=repr(args.ts))
    OutputWriter(args.output, args.format, meta).write(
        ["rho", "sir_db", "se", "rolloff", "closed_form_db"], rows)
    return 0


def _cmd_ber(args) -> int:
    if args.config:
        with open(args.config) as fh:
            base = LinkConfig.from_json(fh.read())
    else:
        model = _parse_model(args) if args.pn != "none" else None
        base = LinkConfig(constellation=args.constellation, rolloff=args.rolloff,
                          osf=args.osf, n_symbols=args.n_symbols, ts=args.ts,
                          pn_mode=args.pn, pn_model=model, esn0_db=None,
                          pilot_len=args.pilot_len, pilot_period=args.pilot_period,
                          seed=args.seed, filter_span=args.span)
    rows = []
    for esn0_db in [float(x) for x in args.esn0_db.split(",")]:
        cfg = LinkConfig(**{**base.__dict__, "esn0_db": esn0_db})
        stats = simulate_link(cfg)
        rows.append([esn0_db, stats.ber, stats.ber_se, stats.n_bits,
                     stats.n_errors, stats.ser, stats.evm_rms])
    meta = _meta(args, seed=base.seed, n_symbols=base.n_symbols,
                 constellation=base.constellation, rolloff=base.rolloff,
                 pn_mode=base.pn_mode,
                 model="none" if base.pn_model is None else _model_meta(base.pn_model))
    OutputWriter(args.output, args.format, meta).write(
        ["esn0_db", "ber", "se", "n_bits", "n_errors", "ser", "evm_rms"], rows)
    return 0


def _cmd_fit(args) -> int:
    pts = load_points(args.points)
    result = fit_single(pts) if args.k == 1 else fit_composite(pts, args.k)
    payload = {
        "meta": _meta(args, points=args.points, k=args.k),
        "params": [
            {"f3db": p.f3db, "l100_db": db(p.l100_sq),
             "linf_db": None if p.linf_sq == 0 else db(p.linf_sq)}
            for p in result.params],
        "residual_rms_db": result.residual_rms_db,
        "iterations": result.iterations,
        "converged": result.converged,
        "flags": list(result.flags),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="phasenoise",
                                  description="oscillator phase-noise toolkit")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("psd", help="evaluate a PSD model over a frequency grid")
    _add_model_flags(p, threegpp=True)
    p.add_argument("--fmin", type=float, default=1.0)
    p.add_argument("--fmax", type=float, default=1e8)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--points", default=None, help="point CSV to evaluate against")
    p.add_argument("--phasor", action="store_true",
                   help="add the phasor continuous density column")
    common(p)
    p.set_defaults(func=_cmd_psd)

    p = sub.add_parser("autocorr", help="phase and phasor autocorrelation")
    _add_model_flags(p)
    p.add_argument("--tau-min", type=float, default=1e-9)
    p.add_argument("--tau-max", type=float, default=1e-1)
    p.add_argument("--n", type=int, default=200)
    common(p)
    p.set_defaults(func=_cmd_autocorr)

    p = sub.add_parser("gen", help="generate a phase-noise sample stream")
    _add_model_flags(p)
    p.add_argument("--ts", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--binary", action="store_true", help="binary dump instead of CSV")
    common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("validate", help="generator spectrum against the model")
    _add_model_flags(p)
    p.add_argument("--ts", type=float, required=True)
    p.add_argument("--n", type=int, default=2 ** 22)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--segment-len", type=int, default=2 ** 14)
    p.add_argument("--band-top-fraction", type=float, default=0.4,
                   help="upper band edge as a fraction of 1/ts")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("errors", help="closed-form symbol-rate error metrics")
    p.add_argument("--l100-db", type=float)
    p.add_argument("--ts", type=float)
    p.add_argument("--f3db", type=float, default=None,
                   help="corner for the normalized aliasing column")
    p.add_argument("--f-ref", type=float, default=1e5)
    p.add_argument("--sweep-rho", default=None, metavar="LO:HI[:N]")
    common(p)
    p.set_defaults(func=_cmd_errors)

    p = sub.add_parser("sir", help="Monte-Carlo SIR sweep vs the closed form")
    p.add_argument("--sweep-rho", default=None, metavar="LO:HI[:N]")
    p.add_argument("--rho", default=None, help="comma list of rho values")
    p.add_argument("--rolloffs", default="0.05,0.1,0.5")
    p.add_argument("--osf", type=int, default=5)
    p.add_argument("--ts", type=float, default=1e-7)
    p.add_argument("--n-symbols", type=int, default=200_000)
    p.add_argument("--span", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    common(p)
    p.set_defaults(func=_cmd_sir)

    p = sub.add_parser("ber", help="Monte-Carlo BER over Es/N0")
    _add_model_flags(p)
    p.add_argument("--esn0-db", default="6,8,10", help="comma list, dB")
    p.add_argument("--constellation", choices=("qpsk", "qam16"), default="qpsk")
    p.add_argument("--rolloff", type=float, default=0.3)
    p.add_argument("--osf", type=int, default=5)
    p.add_argument("--ts", type=float, default=1e-7)
    p.add_argument("--n-symbols", type=int, default=200_000)
    p.add_argument("--pn", choices=("ct", "dt", "none"), default="none")
    p.add_argument("--pilot-len", type=int, default=36)
    p.add_argument("--pilot-period", type=int, default=1476)
    p.add_argument("--span", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--config", default=None, help="JSON link config (overrides flags)")
    common(p)
    p.set_defaults(func=_cmd_ber)

    p = sub.add_parser("fit", help="fit process parameters to PSD points")
    p.add_argument("--points", required=True, help="CSV freq_hz,level_db")
    p.add_argument("--k", type=int, default=1, help="number of processes")
    common(p)
    p.set_defaults(func=_cmd_fit)

    return top


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"phasenoise: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
