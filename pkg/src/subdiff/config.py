"""Run configuration: a small line-based ``key=value`` format.

Documents look like::

    # comments run to end of line
    problem=porous, alpha=0.7

    [time]
    horizon=50, steps=512

    [output]
    snapshot_times=[0.1, 1, 10]

Assignments may share a line when separated by commas (commas inside
bracketed lists do not split).  Keys live in the section opened by the last
``[section]`` header; before any header, bare ``problem`` and ``alpha`` are
accepted as shorthand for ``problem.preset`` and ``problem.alpha``, and any
dotted path works anywhere.  Unknown sections or keys are rejected with the
offending path named, and parsing reports every violation at once rather
than stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "TimeConfig",
    "SolverConfig",
    "CertificatesConfig",
    "StudyConfig",
    "OutputConfig",
    "RunConfig",
    "parse_config",
    "render_config",
]


class ConfigError(ValueError):
    """Carries every problem found in a document, one per line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class ProblemConfig:
    preset: str = "eigenmode"
    alpha: Optional[float] = None
    dimension: Optional[int] = None
    resolution: Optional[int] = None
    extents: Optional[tuple] = None


@dataclass
class TimeConfig:
    horizon: Optional[float] = None
    steps: Optional[int] = None
    grading: Optional[float] = None  # 1 forces a uniform grid; None = alpha default


@dataclass
class SolverConfig:
    mode: str = "picard"
    tol: float = 1e-10
    max_iter: int = 50
    history: str = "direct"
    eps_compress: float = 1e-8


@dataclass
class CertificatesConfig:
    decay: bool = True
    boundedness: bool = True
    convexity: bool = True
    weakform: bool = False
    hoelder: bool = False
    slack: float = 1.05
    weakform_threshold: float = 1e-2
    hoelder_beta_time: float = 0.25
    hoelder_beta_space: float = 0.5


@dataclass
class StudyConfig:
    axis: str = "space"
    levels: int = 3


@dataclass
class OutputConfig:
    dir: str = "out"
    seed: int = 0
    snapshot_times: tuple = ()


@dataclass
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    certificates: CertificatesConfig = field(default_factory=CertificatesConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


_SECTIONS = {
    "problem": ProblemConfig,
    "time": TimeConfig,
    "solver": SolverConfig,
    "certificates": CertificatesConfig,
    "study": StudyConfig,
    "output": OutputConfig,
}

# key -> (kind, checker, requirement text); kinds: str, int, float, bool, floats
_SCHEMA = {
    "problem.preset": ("str", lambda v: v in ("eigenmode", "porous", "zero"), "one of eigenmode, porous, zero"),
    "problem.alpha": ("float", lambda v: 0.0 < v < 1.0, "in the open interval (0, 1)"),
    "problem.dimension": ("int", lambda v: v in (1, 2), "1 or 2"),
    "problem.resolution": ("int", lambda v: v >= 4, ">= 4"),
    "problem.extents": ("floats", lambda v: len(v) in (2, 4), "2 or 4 numbers"),
    "time.horizon": ("float", lambda v: v > 0.0, "> 0"),
    "time.steps": ("int", lambda v: v >= 1, ">= 1"),
    "time.grading": ("float", lambda v: v >= 1.0, ">= 1"),
    "solver.mode": ("str", lambda v: v in ("picard", "newton"), "picard or newton"),
    "solver.tol": ("float", lambda v: v > 0.0, "> 0"),
    "solver.max_iter": ("int", lambda v: v >= 1, ">= 1"),
    "solver.history": ("str", lambda v: v in ("direct", "compressed"), "direct or compressed"),
    "solver.eps_compress": ("float", lambda v: v > 0.0, "> 0"),
    "certificates.decay": ("bool", None, ""),
    "certificates.boundedness": ("bool", None, ""),
    "certificates.convexity": ("bool", None, ""),
    "certificates.weakform": ("bool", None, ""),
    "certificates.hoelder": ("bool", None, ""),
    "certificates.slack": ("float", lambda v: v >= 1.0, ">= 1"),
    "certificates.weakform_threshold": ("float", lambda v: v > 0.0, "> 0"),
    "certificates.hoelder_beta_time": ("float", lambda v: 0.0 < v <= 1.0, "in (0, 1]"),
    "certificates.hoelder_beta_space": ("float", lambda v: 0.0 < v <= 1.0, "in (0, 1]"),
    "study.axis": ("str", lambda v: v in ("space", "time"), "space or time"),
    "study.levels": ("int", lambda v: v >= 2, ">= 2"),
    "output.dir": ("str", None, ""),
    "output.seed": ("int", lambda v: v >= 0, ">= 0"),
    "output.snapshot_times": ("floats", lambda v: all(t >= 0.0 for t in v), "nonnegative times"),
}

_TOPLEVEL_ALIASES = {"problem": "problem.preset", "alpha": "problem.alpha"}


def _split_assignments(line: str):
    """Split on commas that are not inside a bracketed list."""
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(line):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            parts.append(line[start:i])
            start = i + 1
    parts.append(line[start:])
    return [p.strip() for p in parts if p.strip()]


def _parse_value(path: str, raw: str, errors, lineno: int):
    kind, check, req = _SCHEMA[path]
    try:
        if kind == "str":
            val = raw
        elif kind == "bool":
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError
            val = low == "true"
        elif kind == "int":
            val = int(raw)
        elif kind == "float":
            val = float(raw)
        elif kind == "floats":
            inner = raw.strip()
            if not (inner.startswith("[") and inner.endswith("]")):
                raise ValueError
            body = inner[1:-1].strip()
            val = tuple(float(x) for x in body.split(",")) if body else ()
        else:  # pragma: no cover - schema kinds are fixed above
            raise AssertionError(kind)
    except ValueError:
        errors.append(f"line {lineno}: {path} expects {kind}, got {raw!r}")
        return None
    if check is not None and not check(val):
        errors.append(f"line {lineno}: {path}={raw} is out of range (must be {req})")
        return None
    return val


def parse_config(text: str) -> RunConfig:
    errors: list[str] = []
    assigned: dict[str, object] = {}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: unterminated section header {line!r}")
                continue
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                errors.append(f"line {lineno}: unknown section [{name}]")
                section = None
            else:
                section = name
            continue
        for frag in _split_assignments(line):
            if "=" not in frag:
                errors.append(f"line {lineno}: expected key=value, got {frag!r}")
                continue
            key, rawval = (s.strip() for s in frag.split("=", 1))
            if "." in key:
                path = key
            elif section is not None:
                path = f"{section}.{key}"
            elif key in _TOPLEVEL_ALIASES:
                path = _TOPLEVEL_ALIASES[key]
            else:
                errors.append(f"line {lineno}: unknown key {key!r} outside any section")
                continue
            if path not in _SCHEMA:
                errors.append(f"line {lineno}: unknown key {path}")
                continue
            if path in assigned:
                errors.append(f"line {lineno}: duplicate assignment of {path}")
                continue
            val = _parse_value(path, rawval, errors, lineno)
            if val is not None:
                assigned[path] = val
    if errors:
        raise ConfigError(errors)
    cfg = RunConfig()
    for path, val in assigned.items():
        sect, key = path.split(".", 1)
        setattr(getattr(cfg, sect), key, val)
    return cfg


def _format_value(kind: str, val) -> str:
    if kind == "bool":
        return "true" if val else "false"
    if kind == "floats":
        return "[" + ", ".join(repr(float(x)) for x in val) + "]"
    if kind == "float":
        return repr(float(val))
    return str(val)


def render_config(cfg: RunConfig) -> str:
    """Canonical text for ``cfg``; ``parse_config`` round-trips it exactly.

    Fields still at None (meaning "preset default") are omitted.
    """
    lines = []
    for sect, cls in _SECTIONS.items():
        block = []
        obj = getattr(cfg, sect)
        for f in fields(cls):
            val = getattr(obj, f.name)
            if val is None:
                continue
            kind = _SCHEMA[f"{sect}.{f.name}"][0]
            block.append(f"{f.name}={_format_value(kind, val)}")
        if block:
            lines.append(f"[{sect}]")
            lines.extend(block)
            lines.append("")
    return "\n".join(lines)
