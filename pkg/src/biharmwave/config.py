"""Run configuration and its flat ``key = value`` text format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import get_args, get_origin, get_type_hints

SCHEMES = ("morley", "dg", "c0ip")
INTEGRATORS = ("explicit", "implicit")
PROBLEMS = ("example1", "example2")
COUPLINGS = ("auto", "ratio_h2", "equal_h", "fixed", "steps")


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "morley"
    integrator: str = "implicit"
    problem: str = "example1"
    n: tuple[int, ...] = (4, 8, 16, 32)
    rect: tuple[float, ...] | None = None  # None: the problem's domain
    T: float | None = None  # None: the problem's end time
    coupling: str = "auto"  # explicit -> ratio_h2, implicit -> equal_h
    k: float | None = None  # used with coupling = fixed
    k_ratio: float = 0.01  # k = k_ratio * h^2 with coupling = ratio_h2
    steps: int | None = None  # k = T / steps with coupling = steps
    sigma_dg1: float | None = None  # None: problem default
    sigma_dg2: float | None = None
    sigma_ip: float | None = None
    penalty_length: str | None = None  # None: per-scheme default (see FormParams)
    solver: str = "sparse-cholesky"
    solver_tol: float = 1e-12
    cfl_override: bool = False
    cfl_safety: float = 0.95
    out: str | None = None
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")
        if any(int(v) < 1 for v in self.n):
            raise ValueError("mesh resolutions must be positive")
        if self.k is not None and not self.k > 0:
            raise ValueError("time step must be positive")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be positive")

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def resolved_coupling(self) -> str:
        if self.coupling != "auto":
            return self.coupling
        if self.k is not None:
            return "fixed"
        if self.steps is not None:
            return "steps"
        return "ratio_h2" if self.integrator == "explicit" else "equal_h"

    def penalties(self) -> tuple[float, float, float]:
        """(sigma_dg1, sigma_dg2, sigma_ip) with problem-specific defaults."""
        d1, d2 = (20.0, 20.0) if self.problem == "example2" else (10.0, 15.0)
        return (
            d1 if self.sigma_dg1 is None else self.sigma_dg1,
            d2 if self.sigma_dg2 is None else self.sigma_dg2,
            10.0 if self.sigma_ip is None else self.sigma_ip,
        )


def _encode(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_encode(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode(text: str, hint):
    text = text.strip()
    args = get_args(hint)
    if type(None) in args:
        if text.lower() == "none":
            return None
        hint = next(a for a in args if a is not type(None))
    if hint is bool:
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return text.lower() in ("true", "1", "yes")
    if get_origin(hint) is tuple:
        item = get_args(hint)[0]
        return tuple(item(v) for v in text.split(",") if v.strip())
    if hint in (int, float):
        return hint(text)
    return text


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_encode(getattr(cfg, f.name))}\n" for f in fields(cfg))


def parse(text: str, base: RunConfig | None = None) -> RunConfig:
    hints = get_type_hints(RunConfig)
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in hints:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _decode(val, hints[key])
    return dataclasses.replace(base or RunConfig(), **values)


def load(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    return parse(Path(path).read_text(), base)
