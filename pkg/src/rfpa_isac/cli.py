"""Command-line front end: ``rfpa-isac {rate,ber,af,crkg,selftest}``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import harness
from .ambiguity import af_cut, sidelobe_stats
from .channel import probe_cir
from .config import SCHEMES, DEFAULTS, load_config, parse_config_text
from .crkg import generate_labels
from .errors import BadConfig, BadFlag, ConstraintViolation, IoFailure, RfpaError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
SEED_ENV = "RFPA_ISAC_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadFlag(message)


def parse_sweep(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[1] <= 0 or not all(math.isfinite(p) for p in parts):
                raise ValueError
            start, step, stop = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n < 1:
                raise ValueError
            return [round(start + i * step, 12) for i in range(n)]
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise BadFlag(f"bad sweep {text!r}; use start:step:stop or a comma list") from None
    if not vals:
        raise BadFlag("empty sweep")
    return vals


def _overrides(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise BadFlag(f"--set expects KEY=VALUE, got {item!r}")
        out.update(parse_config_text(item))
    return out


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise BadFlag(f"{SEED_ENV}={env!r} is not an integer") from None


def _config(args, **extra):
    if args.config is not None and not Path(args.config).is_file():
        raise BadConfig(f"cannot read config file {args.config}")
    over = _overrides(args.set)
    if getattr(args, "scheme", None):
        over["scheme"] = args.scheme
    if getattr(args, "phi_t", None) is not None:
        over["Phi_T"] = args.phi_t
    if getattr(args, "phi_f", None) is not None:
        over["Phi_f"] = args.phi_f
    over.update(extra)
    return load_config(args.config, over)


def _emit(text: str, out: Optional[str], force: bool) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        harness.write_text(out, text, force)
    except FileExistsError as exc:
        raise IoFailure(str(exc)) from None
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc.strerror}") from None


def _precheck(args, *extra) -> None:
    """Refuse up front, before any computation, to replace existing outputs."""
    if args.force:
        return
    for path in (args.out, *extra):
        if path not in (None, "-") and Path(path).exists():
            raise IoFailure(f"{path} exists (use --force to overwrite)")


def _fmt(v) -> str:
    return repr(float(v))


def cmd_rate(args) -> int:
    cfg = _config(args)
    _precheck(args)
    rows = harness.rate_table(cfg)
    lines = ["# kind: rate", f"# config_digest: {cfg.digest()}", "# config:"]
    lines += [f"#   {ln}" for ln in cfg.as_lines()]
    lines.append("M,R_ph,R_amp,R_sim,R_hyb")
    for r in rows:
        lines.append(",".join([str(r["M"])] + [_fmt(r[s]) for s in SCHEMES]))
    _emit("\n".join(lines) + "\n", args.out, args.force)
    return EXIT_OK


def cmd_ber(args) -> int:
    cfg = _config(args)
    _precheck(args)
    axis = sorted(parse_sweep(args.ebn0))
    spec = harness.ExperimentSpec("ber", cfg, tuple(axis), args.trials, _seed(args), args.out, args.workers)
    res = harness.run_ber_sweep(spec)
    _emit(harness.curve_csv(res, cfg), args.out, args.force)
    return EXIT_OK


def cmd_af(args) -> int:
    extra = {}
    if args.agility == "off":
        extra = {"Phi_T": 1, "Phi_f": 1}
    cfg = _config(args, **extra)
    seed = _seed(args)
    if args.out not in (None, "-"):
        _precheck(args, str(Path(args.out).with_suffix(".meta.txt")))
    grid = af_cut(cfg, cut=args.cut, points=args.points, draws=args.draws, seed=seed)
    axis, db = grid.cut()
    meta = dict(grid.meta)
    meta["agility"] = args.agility
    header = [f"# {k}: {v}" for k, v in meta.items()]
    lines = header + ["axis_value,af_db"] + [f"{_fmt(a)},{_fmt(v)}" for a, v in zip(axis, db)]
    _emit("\n".join(lines) + "\n", args.out, args.force)
    if args.out not in (None, "-"):
        side = [f"{k} = {v}" for k, v in meta.items()]
        side += [f"delay_axis = {grid.delay_axis}", f"doppler_axis = {grid.doppler_axis}"]
        if args.cut == "zero-doppler":
            side += [f"{k} = {v!r}" for k, v in sidelobe_stats(grid, cfg).items()]
        side += cfg.as_lines()
        _emit("\n".join(side) + "\n", str(Path(args.out).with_suffix(".meta.txt")), args.force)
    return EXIT_OK


def cmd_crkg(args) -> int:
    seed = _seed(args)
    # alphabet sizes here are not bound by the waveform limits, so they stay out of the config
    cfg = load_config(args.config, _overrides(args.set))
    _precheck(args, args.scatter)
    phis = sorted({args.phi_t if args.phi_t is not None else DEFAULTS["Phi_T"],
                   args.phi_f if args.phi_f is not None else DEFAULTS["Phi_f"]})
    for p in phis:
        if p < 1 or p & (p - 1):
            raise BadFlag(f"alphabet size {p} is not a power of two")
        if args.length % p:
            raise BadFlag(f"--length {args.length} not divisible by {p}")
    if args.z <= 0:
        raise BadFlag("--z must be positive")
    snrs = sorted(parse_sweep(args.snr_probe))
    pts = harness.run_crkg_sweep(args.length, snrs, phis, args.trials, seed, args.z)
    lines = ["# kind: crkg", f"# config_digest: {cfg.digest()}", f"# seed: {seed}", f"# length: {args.length}", f"# trials: {args.trials}",
             f"# z: {args.z!r}", "snr_db,phi,bdr,entropy_bits"]
    lines += [f"{_fmt(p.snr_db)},{p.phi},{_fmt(p.bdr)},{_fmt(p.entropy_bits)}" for p in pts]
    _emit("\n".join(lines) + "\n", args.out, args.force)
    if args.scatter:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        probe = probe_cir(args.length, snrs[0], rng)
        a, b, _ = generate_labels(probe, phis[0], seed=seed, z=args.z, include_eve=False)
        rows = ["re,im,label_alice,label_bob"]
        rows += [f"{_fmt(v.real)},{_fmt(v.imag)},{x},{y}" for v, x, y in zip(probe.alice, a, b)]
        _emit("\n".join(rows) + "\n", args.scatter, args.force)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_all

    results = run_all()
    for name, ok, msg in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {msg}" if msg else ""))
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--seed", type=int, help=f"RNG seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="rfpa-isac", description="Secure RFPA frequency-hopping ISAC simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("rate", parents=[common], help="achievable bit rate vs antenna count")

    b = sub.add_parser("ber", parents=[common], help="Bob/Eve BER vs Eb/N0")
    b.add_argument("--scheme", choices=SCHEMES, default=None)
    b.add_argument("--ebn0", default="0:4:20", help="Eb/N0 sweep in dB")
    b.add_argument("--trials", type=int, default=100_000, help="information bits per point")
    b.add_argument("--phi-t", type=int)
    b.add_argument("--phi-f", type=int)

    a = sub.add_parser("af", parents=[common], help="ambiguity-function cut")
    a.add_argument("--scheme", choices=SCHEMES, default="PH")
    a.add_argument("--cut", choices=("zero-doppler", "zero-delay"), default="zero-doppler")
    a.add_argument("--draws", type=int, default=64)
    a.add_argument("--points", type=int, default=801)
    a.add_argument("--agility", choices=("on", "off"), default="on")
    a.add_argument("--phi-t", type=int)
    a.add_argument("--phi-f", type=int)

    c = sub.add_parser("crkg", parents=[common], help="secret generation BDR and entropy")
    c.add_argument("--length", type=int, default=1024, help="probe samples L")
    c.add_argument("--phi-t", type=int)
    c.add_argument("--phi-f", type=int)
    c.add_argument("--snr-probe", default="0:10:30", help="probing SNR sweep in dB")
    c.add_argument("--trials", type=int, default=20, help="probing runs per point")
    c.add_argument("--z", type=float, default=2.0)
    c.add_argument("--scatter", help="also dump one labeled probe set to this CSV")

    sub.add_parser("selftest", parents=[common], help="run built-in invariant checks")
    return p


_COMMANDS = {"rate": cmd_rate, "ber": cmd_ber, "af": cmd_af, "crkg": cmd_crkg, "selftest": cmd_selftest}


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise BadFlag("--workers must be >= 1")
        for name in ("trials", "draws", "points", "length"):
            if getattr(args, name, 1) < 1:
                raise BadFlag(f"--{name} must be >= 1")
        return _COMMANDS[args.command](args)
    except (BadFlag, BadConfig, ConstraintViolation) as exc:
        print(f"rfpa-isac: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IoFailure, RfpaError, ValueError, OSError) as exc:
        print(f"rfpa-isac: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
