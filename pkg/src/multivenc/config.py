"""TOML run configuration.

Example::

    scheme = "balanced4"          # optional built-in to start from
    moments = [["-1", "-1", "-1"], ["1", "1", "-1"], ["1", "-1", "1"], ["-1", "1", "1"]]
    gamma_m = "pi/100"            # real, or a rational multiple of pi
    noise_std = 0.2
    preprocessor = "p91"          # built-in name or path to a D x N matrix file

    [simulation]
    velocity = [10, 10, 10]
    snr = 20
    trials = 10000
    seed = 0
    coils = 1
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .encoding import (
    BUILTIN_PREPROCESSORS,
    BUILTIN_SCHEMES,
    DEFAULT_NOISE_STD,
    EncodingScheme,
    Preprocessor,
    builtin_preprocessor,
    builtin_scheme,
)
from .errors import ConfigError, IrrationalEntryError
from .exact_arith import RationalMatrix, as_rational, parse_rational

__all__ = ["RunConfig", "load_config", "parse_config", "parse_gamma_m", "read_rational_matrix"]

_PI_EXPR = re.compile(
    r"^\s*(?:(?P<coef>[-+]?\d+(?:/\d+)?)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>\d+))?\s*$"
)


def parse_gamma_m(value) -> tuple[float, Optional[Fraction]]:
    """``gamma_m`` as ``(float, gamma_m / pi or None)``.

    Accepts a number, a rational literal, or ``"pi/100"``, ``"3*pi/200"``.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value), None
    if not isinstance(value, str):
        raise ConfigError(f"gamma_m must be a number or string, got {value!r}")
    m = _PI_EXPR.match(value)
    if m:
        coef = Fraction(m["coef"]) if m["coef"] else Fraction(1)
        over_pi = coef / int(m["den"] or 1)
        return math.pi * float(over_pi), over_pi
    try:
        return float(parse_rational(value)), None
    except IrrationalEntryError:
        raise ConfigError(f"cannot parse gamma_m {value!r}") from None


def read_rational_matrix(path) -> RationalMatrix:
    """Whitespace- or comma-separated rational rows; ``#`` starts a comment."""
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([parse_rational(tok) for tok in re.split(r"[,\s]+", line) if tok])
    if not rows:
        raise ConfigError(f"{path}: empty matrix file")
    try:
        return RationalMatrix.from_rows(rows)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class RunConfig:
    scheme: EncodingScheme
    preprocessor: Optional[Preprocessor] = None
    simulation: dict[str, Any] = field(default_factory=dict)
    resolved: dict[str, Any] = field(default_factory=dict)
    path: Optional[str] = None


def _resolve_preprocessor(value, base_dir: Path, range_definition: Optional[str]) -> Preprocessor:
    if value in BUILTIN_PREPROCESSORS:
        return builtin_preprocessor(value)
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"preprocessor {value!r} is neither a built-in nor an existing file")
    return Preprocessor(read_rational_matrix(path), name=path.stem, range_definition=range_definition or "slab")


def parse_config(data: dict, base_dir: Path = Path("."), path: Optional[str] = None) -> RunConfig:
    known = {"scheme", "L", "moments", "gamma_m", "magnitudes", "noise_std",
             "preprocessor", "preprocessor_range", "simulation"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    base = None
    if "scheme" in data:
        if data["scheme"] not in BUILTIN_SCHEMES:
            raise ConfigError(f"unknown scheme {data['scheme']!r}")
        base = builtin_scheme(data["scheme"])

    if "moments" in data:
        rows = data["moments"]
        if not isinstance(rows, list) or not all(isinstance(r, list) and len(r) == 3 for r in rows):
            raise ConfigError("moments must be a list of 3-element rows")
        moments = RationalMatrix.from_rows([[as_rational(x) for x in r] for r in rows])
    elif base is not None:
        moments = base.moments
    else:
        raise ConfigError("config needs `moments` or a built-in `scheme`")
    if "L" in data and data["L"] != moments.rows:
        raise ConfigError(f"L = {data['L']} but {moments.rows} moment rows given")

    if "gamma_m" in data:
        gamma_m, over_pi = parse_gamma_m(data["gamma_m"])
    elif base is not None:
        gamma_m, over_pi = base.gamma_m, base.gamma_m_over_pi
    else:
        raise ConfigError("config needs `gamma_m`")

    try:
        scheme = EncodingScheme(
            moments=moments,
            gamma_m=gamma_m,
            gamma_m_over_pi=over_pi,
            magnitudes=tuple(data.get("magnitudes", ())),
            noise_std=float(data.get("noise_std", base.noise_std if base else DEFAULT_NOISE_STD)),
            name=data.get("scheme", "custom"),
        )
    except IrrationalEntryError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    pre = None
    if "preprocessor" in data:
        pre = _resolve_preprocessor(data["preprocessor"], base_dir, data.get("preprocessor_range"))

    sim = data.get("simulation", {})
    if not isinstance(sim, dict):
        raise ConfigError("[simulation] must be a table")

    resolved = {
        "scheme": scheme.name,
        "L": scheme.L,
        "moments": ";".join(",".join(str(x) for x in scheme.moments.row(i)) for i in range(scheme.L)),
        "gamma_m": repr(scheme.gamma_m),
        "gamma_m_over_pi": None if over_pi is None else str(over_pi),
        "magnitudes": ",".join(repr(a) for a in scheme.magnitudes),
        "noise_std": repr(scheme.noise_std),
        "preprocessor": None if pre is None else pre.name,
    }
    return RunConfig(scheme=scheme, preprocessor=pre, simulation=dict(sim), resolved=resolved, path=path)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, base_dir=path.parent, path=str(path))
