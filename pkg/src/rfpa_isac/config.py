"""Waveform configuration: parameter record, validation and the key=value file format."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import BadConfig, ConstraintViolation

SCHEMES = ("PH", "AMP", "SIM", "HYB")

# Simulation defaults of the reference system (X-band FH radar, 200 MHz).
DEFAULTS: dict[str, Any] = {
    "K": 10,
    "M": 8,
    "N": 8,
    "L": 8,
    "delta_f": 5e6,
    "delta_t": 0.2e-6,
    "T_p": 10e-6,
    "tau": 2e-6,
    "f_s": 400e6,
    "BW": 200e6,
    "J_ask": 2,
    "J_psk": 4,
    "Phi_T": 4,
    "Phi_f": 4,
    "scheme": "HYB",
    "legacy_eq6_timebase": False,
}

_INT_FIELDS = ("K", "Q", "M", "N", "L", "J_ask", "J_psk", "Phi_T", "Phi_f")
_FLOAT_FIELDS = ("delta_f", "delta_t", "T_p", "tau", "f_s", "BW", "ask_step")
_REL = 1e-9


@dataclass(frozen=True)
class WaveformConfig:
    """Validated radar/communication parameters. Build through :func:`validate_config`."""

    K: int
    Q: int
    M: int
    N: int
    L: int
    delta_f: float
    delta_t: float
    T_p: float
    tau: float
    f_s: float
    BW: float
    J_ask: int
    J_psk: int
    ask_step: float
    Phi_T: int
    Phi_f: int
    scheme: str = "HYB"
    legacy_eq6_timebase: bool = False

    @property
    def spc(self) -> int:
        """Samples per chip."""
        return int(round(self.f_s * self.delta_t))

    @property
    def pulse_samples(self) -> int:
        return self.Q * self.spc

    @property
    def pri_samples(self) -> int:
        return int(round(self.T_p * self.f_s))

    @property
    def prf(self) -> float:
        return 1.0 / self.T_p

    def replace(self, **changes) -> "WaveformConfig":
        """Return a re-validated copy with some fields changed."""
        raw = dataclasses.asdict(self)
        if ("tau" in changes or "delta_t" in changes) and "Q" not in changes:
            raw.pop("Q")
        if "J_ask" in changes and "ask_step" not in changes:
            raw.pop("ask_step")
        raw.update(changes)
        return validate_config(raw)

    def digest(self) -> str:
        text = ";".join(f"{k}={v!r}" for k, v in sorted(dataclasses.asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def as_lines(self) -> list[str]:
        return [f"{k} = {v}" for k, v in dataclasses.asdict(self).items()]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL, abs_tol=0.0)


def _le(a: float, b: float) -> bool:
    return a <= b * (1 + _REL)


def _integral(x: float) -> bool:
    return abs(x - round(x)) <= _REL * max(1.0, abs(x))


def validate_config(raw: Mapping[str, Any]) -> WaveformConfig:
    """Check a raw parameter record and return a :class:`WaveformConfig`.

    ``Q`` may be omitted (derived from ``tau / delta_t``) and so may ``ask_step``
    (derived as ``1 / (2 J_ask - 1)`` so the largest amplitude is 1).
    Raises :class:`ConstraintViolation` naming the first broken constraint.
    """
    vals = dict(raw)
    scheme = str(vals.get("scheme", "HYB")).upper()
    legacy = vals.get("legacy_eq6_timebase", False)
    if isinstance(legacy, str):
        legacy = legacy.strip().lower() in ("1", "true", "yes", "on")

    for key in ("K", "M", "N", "L", "delta_f", "delta_t", "T_p", "tau", "f_s", "BW",
                "J_ask", "J_psk", "Phi_T", "Phi_f"):
        if vals.get(key) is None:
            raise ConstraintViolation(f"{key} present")
    if vals.get("Q") is None:
        vals["Q"] = round(float(vals["tau"]) / float(vals["delta_t"]))
    if vals.get("ask_step") is None:
        vals["ask_step"] = 1.0 / (2 * int(vals["J_ask"]) - 1)

    for key in _INT_FIELDS:
        try:
            v = float(vals[key])
        except (TypeError, ValueError):
            raise ConstraintViolation(f"{key} numeric", repr(vals[key])) from None
        if not _integral(v):
            raise ConstraintViolation(f"{key} integer", repr(vals[key]))
        vals[key] = int(round(v))
    for key in _FLOAT_FIELDS:
        try:
            vals[key] = float(vals[key])
        except (TypeError, ValueError):
            raise ConstraintViolation(f"{key} numeric", repr(vals[key])) from None
    for key in _INT_FIELDS + _FLOAT_FIELDS:
        if not vals[key] > 0 or not math.isfinite(vals[key]):
            raise ConstraintViolation(f"{key} > 0", repr(vals[key]))
    if scheme not in SCHEMES:
        raise ConstraintViolation("scheme", scheme)

    K, Q, M, N = vals["K"], vals["Q"], vals["M"], vals["N"]
    df, dt, Tp, tau = vals["delta_f"], vals["delta_t"], vals["T_p"], vals["tau"]
    fs, bw = vals["f_s"], vals["BW"]

    if not _close(dt, 1.0 / df):
        raise ConstraintViolation("delta_t = 1/delta_f", f"{dt} vs {1.0 / df}")
    if not _le(K * df, bw):
        raise ConstraintViolation("K·delta_f ≤ BW")
    if not _close(tau, Q * dt):
        raise ConstraintViolation("tau = Q·delta_t", f"tau={tau}, Q={Q}")
    if not _integral(fs * dt):
        raise ConstraintViolation("f_s·delta_t integer", f"{fs * dt}")
    if not _integral(fs * Tp):
        raise ConstraintViolation("f_s·T_p integer", f"{fs * Tp}")
    if M > K:
        raise ConstraintViolation("M ≤ K", f"M={M}, K={K}")
    if not _le(vals["Phi_T"], Tp / tau - 1):
        raise ConstraintViolation("Phi_T ≤ T_p/tau − 1", f"Phi_T={vals['Phi_T']}")
    if not _le(vals["Phi_f"], bw / (K * df)):
        raise ConstraintViolation("Phi_f ≤ BW/(K·delta_f)", f"Phi_f={vals['Phi_f']}")
    for key in ("Phi_T", "Phi_f", "J_ask", "J_psk"):
        if not _is_pow2(vals[key]):
            raise ConstraintViolation(f"{key} power of two", str(vals[key]))
    if N < M:
        raise ConstraintViolation("N ≥ M", f"N={N}, M={M}")

    fields = {f.name for f in dataclasses.fields(WaveformConfig)}
    unknown = set(vals) - fields
    if unknown:
        raise ConstraintViolation("known keys", ", ".join(sorted(unknown)))
    vals["scheme"] = scheme
    vals["legacy_eq6_timebase"] = bool(legacy)
    return WaveformConfig(**vals)


def default_config(**overrides) -> WaveformConfig:
    raw = dict(DEFAULTS)
    raw.update(overrides)
    return validate_config(raw)


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise BadConfig(f"line {lineno}: empty key")
        out[key] = _coerce(value)
    return out


def _coerce(value: str) -> Any:
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> WaveformConfig:
    """Read a config file (defaults fill missing keys) and apply overrides."""
    raw = dict(DEFAULTS)
    if path is not None:
        raw.update(parse_config_text(Path(path).read_text()))
    if overrides:
        raw.update(overrides)
    return validate_config(raw)
