"""Experiment configuration files.

Configs are JSON with nested sections: an environment recipe (horizon-free,
the grid supplies horizons), a policy list, the horizon grid, seed counts,
and optional property-suite toggles.  Validation happens at load time and
error messages carry the line of the offending key where one can be found.
"""

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources

from .checks import CHECK_SUITES
from .environments import EnvSpec
from .errors import ConfigurationError
from .policies import PolicySpec

CONFIG_KEYS = ("environment", "policies", "horizons", "seeds",
               "master_seed", "out", "checks")
REQUIRED_KEYS = ("environment", "policies", "horizons")
PRESETS = ("fig1", "fig2")


def _line_of(text: str, token: str):
    # line of the first quoted occurrence; None when the token is absent
    idx = text.find(f'"{token}"')
    if idx < 0:
        return None
    return text.count("\n", 0, idx) + 1


def _fail(text: str, token, message: str):
    line = _line_of(text, token) if token else None
    if line is not None:
        raise ConfigurationError(f"line {line}: {message}")
    raise ConfigurationError(message)


@dataclass(frozen=True)
class BudgetRule:
    """Drift budget, either a fixed value or a power of the horizon."""

    kind: str  # "fixed" | "power"
    value: float

    def resolve(self, horizon: int) -> float:
        if self.kind == "fixed":
            return self.value
        return float(horizon) ** self.value


def _parse_budget(raw, text):
    if raw is None:
        return None
    if isinstance(raw, bool):
        _fail(text, "budget", "budget must be a number or a power_of_T object")
    if isinstance(raw, (int, float)):
        return BudgetRule(kind="fixed", value=float(raw))
    if isinstance(raw, dict):
        if set(raw) != {"power_of_T"}:
            _fail(text, "budget",
                  "budget object must have exactly the key power_of_T")
        exponent = raw["power_of_T"]
        if isinstance(exponent, str):
            try:
                exponent = Fraction(exponent)
            except (ValueError, ZeroDivisionError):
                _fail(text, "power_of_T",
                      f"cannot parse exponent {raw['power_of_T']!r}")
        if not isinstance(exponent, (int, float, Fraction)):
            _fail(text, "power_of_T", "exponent must be a number or fraction")
        return BudgetRule(kind="power", value=float(exponent))
    _fail(text, "budget", "budget must be a number or a power_of_T object")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment recipe: environments x policies x horizons."""

    environment: dict
    budget: BudgetRule | None
    policies: tuple
    horizons: tuple
    seeds: int = 20
    master_seed: int = 0
    out: str = "results"
    checks: tuple = field(default=())

    def env_spec_for(self, horizon: int) -> EnvSpec:
        budget = None if self.budget is None else self.budget.resolve(horizon)
        return EnvSpec(horizon=int(horizon), budget=budget, **self.environment)

    def env_specs(self):
        return [self.env_spec_for(h) for h in self.horizons]

    def with_overrides(self, seeds=None, master_seed=None, out=None):
        cfg = self
        if seeds is not None:
            cfg = replace(cfg, seeds=int(seeds))
        if master_seed is not None:
            cfg = replace(cfg, master_seed=int(master_seed))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be an object")
    for key in data:
        if key not in CONFIG_KEYS:
            _fail(text, key, f"unknown config key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in data:
            raise ConfigurationError(f"missing required config key {key!r}")

    env_section = data["environment"]
    if not isinstance(env_section, dict):
        _fail(text, "environment", "environment must be an object")
    env = dict(env_section)
    budget = _parse_budget(env.pop("budget", None), text)
    allowed = {"kind", "dim", "noise_scale", "seed", "theta"}
    for key in env:
        if key not in allowed:
            _fail(text, key, f"unknown environment key {key!r}")
    if "kind" not in env:
        _fail(text, "environment", "environment needs a kind")
    if "theta" in env:
        env["theta"] = tuple(float(v) for v in env["theta"])

    raw_policies = data["policies"]
    if not isinstance(raw_policies, list) or not raw_policies:
        _fail(text, "policies", "policies must be a non-empty list")
    policies = []
    for entry in raw_policies:
        if not isinstance(entry, dict):
            _fail(text, "policies", "each policy must be an object")
        try:
            policies.append(PolicySpec.from_dict(entry))
        except ConfigurationError as exc:
            token = entry.get("kind") if isinstance(entry.get("kind"), str) else "policies"
            _fail(text, token, str(exc))

    raw_horizons = data["horizons"]
    if (not isinstance(raw_horizons, list) or not raw_horizons
            or not all(isinstance(h, int) and h >= 1 for h in raw_horizons)):
        _fail(text, "horizons", "horizons must be a list of positive integers")

    seeds = data.get("seeds", 20)
    if not isinstance(seeds, int) or seeds < 1:
        _fail(text, "seeds", "seeds must be a positive integer")
    master_seed = data.get("master_seed", 0)
    if not isinstance(master_seed, int) or master_seed < 0:
        _fail(text, "master_seed", "master_seed must be a nonnegative integer")
    out = data.get("out", "results")
    if not isinstance(out, str) or not out:
        _fail(text, "out", "out must be a non-empty path string")

    raw_checks = data.get("checks", {})
    if not isinstance(raw_checks, dict):
        _fail(text, "checks", "checks must map suite names to booleans")
    enabled = []
    for name, flag in raw_checks.items():
        if name not in CHECK_SUITES:
            _fail(text, name, f"unknown check suite {name!r}")
        if not isinstance(flag, bool):
            _fail(text, name, f"check toggle {name!r} must be a boolean")
        if flag:
            enabled.append(name)

    cfg = ExperimentConfig(
        environment=env, budget=budget, policies=tuple(policies),
        horizons=tuple(int(h) for h in raw_horizons), seeds=seeds,
        master_seed=master_seed, out=out, checks=tuple(enabled))
    # realize one EnvSpec and all policy builds now so a bad combination
    # fails before any episode starts
    try:
        spec = cfg.env_spec_for(cfg.horizons[0])
        for pol in cfg.policies:
            pol.build(default_budget=spec.budget)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc)) from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}")
    return (resources.files("driftband") / "presets" / f"{name}.json").read_text()


def load_preset(name: str) -> ExperimentConfig:
    return parse_config(preset_text(name))
