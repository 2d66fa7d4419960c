"""Flat ``key = value`` experiment configuration files.

Example::

    # FARIMA(0, 0.35, 0) observed at Pareto(1.9) times
    model = farima
    d = 0.35
    law = pareto:1.9
    n = 5000
    reps = 100
    seed = 1
    estimator = fexp

Lists are comma separated (``ar = 0.5, -0.2``); Gegenbauer components are
``theta:d`` pairs (``components = 2.0943951:0.3``).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import samplaw
from .errors import DomainError
from .procgen import DEFAULT_M, FarimaSpec, GegenbauerSpec

T_MAX = 10 ** 8


@dataclass(frozen=True)
class ExperimentConfig:
    model: Union[FarimaSpec, GegenbauerSpec]
    law: samplaw.SamplingLaw
    n: int = 5000
    reps: int = 100
    seed: int = 0
    estimator: str = "fexp"
    tuning: Optional[int] = None
    lags: int = 50
    outputs: Optional[str] = None
    m: int = DEFAULT_M
    t_max: int = T_MAX
    max_retries: int = 20

    def __post_init__(self):
        if self.n < 64:
            raise DomainError("n must be >= 64")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.estimator not in ("gph", "fexp"):
            raise DomainError(f"estimator must be gph or fexp, got {self.estimator!r}")
        if self.m < 0 or self.t_max < 1 or self.max_retries < 0:
            raise DomainError("m, t_max and max_retries must be nonnegative")

    def echo(self) -> dict:
        out = asdict(self)
        out["model"] = self.model.describe()
        out["law"] = str(self.law)
        return out


_INT = {"n", "reps", "seed", "tuning", "lags", "m", "t_max", "max_retries"}
_KNOWN = _INT | {"model", "d", "ar", "ma", "noise_var", "components", "law", "estimator", "outputs"}


def _floats(text):
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def parse_config_text(text: str) -> ExperimentConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep:
            raise DomainError(f"line {lineno}: expected key = value")
        if key not in _KNOWN:
            raise DomainError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return config_from_mapping(raw)


def config_from_mapping(raw: dict) -> ExperimentConfig:
    try:
        kind = raw.get("model", "farima").lower()
        arma = FarimaSpec(0.0, _floats(raw.get("ar", "")), _floats(raw.get("ma", "")),
                          float(raw.get("noise_var", 1.0)))
        if kind == "farima":
            model = FarimaSpec(float(raw.get("d", 0.0)), arma.ar_coeffs, arma.ma_coeffs, arma.noise_var)
        elif kind == "gegenbauer":
            comps = []
            for item in filter(None, (s.strip() for s in raw.get("components", "").split(","))):
                t, _, dj = item.partition(":")
                comps.append((_angle(t), float(dj)))
            model = GegenbauerSpec(tuple(comps), arma)
        else:
            raise DomainError(f"unknown model {kind!r}")
        if "law" not in raw:
            raise DomainError("missing key 'law'")
        kw = {k: int(raw[k]) for k in _INT if k in raw}
        return ExperimentConfig(model=model, law=samplaw.parse_law(raw["law"]),
                                estimator=raw.get("estimator", "fexp").lower(),
                                outputs=raw.get("outputs"), **kw)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad configuration value: {exc}") from None


def _angle(text: str) -> float:
    """A frequency written as a number or as ``pi``, ``pi/4``, ``3pi/4``, ``2*pi/3``."""
    t = text.strip().lower().replace("*", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("pi", "")
    value = (float(coef) if coef else 1.0) * math.pi
    return value / float(den) if den else value


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise DomainError(f"config file {path} not found")
    return parse_config_text(p.read_text())
