"""Experiment configuration files.

Configs are TOML documents::

    kind = "lambda-histogram"
    seed = 2024
    n_samples = 10000

    [grid]
    d = [100]
    s = [1, 5, 10]           # or a rule: { rule = "linear", c = [1, 4] }

    [params]
    which = "lambda1"

The environment dimension can be a fixed list or a rule evaluated per d:
``{rule = "linear", c = [...]}`` gives s = ceil(c d), ``{rule = "power",
t = [...]}`` gives s = ceil(d^t).
"""

import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "GridPoint", "load_config", "parse_config", "KINDS"]

KINDS = {
    "lambda-histogram": "histogram",
    "moment-oracle": "oracle-check",
    "spectral": "spectral",
    "ppt-scan": "ppt-scan",
    "ppt2-sweep": "ppt2",
}

MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass(frozen=True)
class GridPoint:
    d: int
    s: int
    label: str
    s2: int = None

    def as_dict(self):
        out = {"d": self.d, "s": self.s, "rule": self.label}
        if self.s2 is not None:
            out["s2"] = self.s2
        return out


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    n_samples: int
    grid: list
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: str = None
    threads: int = 1
    raw: dict = field(default_factory=dict)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


def _ceil(x):
    # guard against 9 * 200 = 1800.0000000000002 style rounding
    return int(math.ceil(x - 1e-9))


def _positive_ints(values, what):
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{what} must be a positive integer or a nonempty list")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"{what} entries must be positive integers, got {v!r}")
        out.append(v)
    return out


def _s_rule(spec, d, what):
    """List of (s, label) for one dimension."""
    if isinstance(spec, dict):
        rule = spec.get("rule")
        if rule == "linear":
            cs = spec.get("c")
            cs = cs if isinstance(cs, list) else [cs]
            if any(not isinstance(c, (int, float)) or c <= 0 for c in cs):
                raise ConfigError(f"{what}.c must be positive numbers")
            return [(max(1, _ceil(c * d)), f"ceil({c}*d)") for c in cs]
        if rule == "power":
            ts = spec.get("t")
            ts = ts if isinstance(ts, list) else [ts]
            if any(not isinstance(t, (int, float)) or t < 0 for t in ts):
                raise ConfigError(f"{what}.t must be nonnegative numbers")
            return [(max(1, _ceil(d**t)), f"ceil(d^{t})") for t in ts]
        raise ConfigError(f"{what}.rule must be 'linear' or 'power', got {rule!r}")
    return [(s, "fixed") for s in _positive_ints(spec, what)]


def _build_grid(grid, kind):
    if not isinstance(grid, dict):
        raise ConfigError("missing [grid] table")
    if "d" not in grid or "s" not in grid:
        raise ConfigError("[grid] needs both d and s")
    ds = _positive_ints(grid["d"], "grid.d")
    points = []
    for d in ds:
        s_list = _s_rule(grid["s"], d, "grid.s")
        if kind == "ppt2-sweep" and "s2" in grid:
            s2_list = _s_rule(grid["s2"], d, "grid.s2")
            if len(s2_list) != len(s_list):
                raise ConfigError("grid.s and grid.s2 must have the same length")
            for (s, lab), (s2, lab2) in zip(s_list, s2_list):
                points.append(GridPoint(d, s, f"{lab};{lab2}", s2))
        else:
            for s, lab in s_list:
                points.append(GridPoint(d, s, lab, s if kind == "ppt2-sweep" else None))
    return points


_PARAM_CHOICES = {
    "lambda-histogram": {"which": ("lambda1", "lambda2", "lambda3")},
    "spectral": {"scaling": ("sC", "sqrt_ds_C", "dC")},
    "ppt2-sweep": {"mode": ("independent", "equal", "conjugate")},
}
FAMILIES = ("UU", "UUbar", "OO", "HH", "DUC", "CDUC", "DOC", "unstructured")


def _check_params(kind, params):
    for key, choices in _PARAM_CHOICES.get(kind, {}).items():
        if key not in params:
            raise ConfigError(f"[params] needs {key!r} for kind {kind!r}")
        if params[key] not in choices:
            raise ConfigError(f"params.{key} must be one of {choices}, got {params[key]!r}")
    if kind == "ppt-scan":
        fams = params.get("families", params.get("family"))
        if fams is None:
            raise ConfigError("[params] needs 'family' (or 'families') for kind 'ppt-scan'")
        fams = fams if isinstance(fams, list) else [fams]
        bad = [f for f in fams if f not in FAMILIES]
        if bad or not fams:
            raise ConfigError(f"unknown families {bad}; choose from {FAMILIES}")
        params["families"] = fams
        params.pop("family", None)
    if kind == "moment-oracle":
        targets = params.get("targets")
        if not isinstance(targets, list) or not targets:
            raise ConfigError("[params] needs a nonempty 'targets' list for kind 'moment-oracle'")
        from ..weingarten import TARGETS

        for t in targets:
            if not isinstance(t, dict) or t.get("target") not in TARGETS:
                raise ConfigError(f"each target needs target in {TARGETS}, got {t!r}")
            p = t.get("p", [1])
            p = p if isinstance(p, list) else [p]
            t["p"] = _positive_ints(p, "targets.p")


def parse_config(raw, seed=None, output=None, threads=None):
    """Validate a config mapping; CLI overrides take precedence."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {sorted(KINDS)}, got {kind!r}")
    seed = raw.get("seed", 0) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    n = raw.get("n_samples")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"n_samples must be a positive integer, got {n!r}")
    params = dict(raw.get("params", {}))
    _check_params(kind, params)
    tolerances = dict(raw.get("tolerances", {}))
    for k, v in tolerances.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"tolerance {k!r} must be a nonnegative number")
    threads = raw.get("threads", 1) if threads is None else threads
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    return ExperimentConfig(
        kind=kind,
        seed=seed,
        n_samples=n,
        grid=_build_grid(raw.get("grid"), kind),
        params=params,
        tolerances=tolerances,
        output=output if output is not None else raw.get("output"),
        threads=threads,
        raw=raw,
    )


def load_config(path, **overrides):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, **overrides)
