"""INI study configs.

Schema (every key optional except ``study.name``)::

    [study]
    name = neutrality_sweep      ; bin_sweep | neutrality_sweep | pareto_distance | autove_compare
    preset = desk                ; desk | full, applied before the keys below
    bounds_case = C
    record_timing = yes

    [budget]
    solutions = 100
    generations = 256
    epochs = 350

    [grid]
    bins = 25, 50, 100, 200, 400
    cases = A, B, C, D, E
    pareto_cases = B, E
    latent_dims = 2, 5, 10

    [replicates]
    seeds = 1..5                 ; inclusive range or comma list

Unknown sections or keys are rejected with the full list of offenders.
"""
from __future__ import annotations

import configparser
from pathlib import Path

from .experiments import PRESETS, ExperimentConfig

SCHEMA = {
    "study": {"name": str, "preset": str, "bounds_case": str, "record_timing": bool},
    "budget": {"solutions": int, "generations": int, "epochs": int},
    "grid": {"bins": "ints", "cases": "strs", "pareto_cases": "strs", "latent_dims": "ints"},
    "replicates": {"seeds": "seeds"},
}
_FIELD = {"name": "study"}


class ConfigError(ValueError):
    pass


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1..5"`` -> (1, 2, 3, 4, 5); ``"0, 3, 7"`` -> (0, 3, 7)."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad seed range {text!r}") from None
        if hi_i < lo_i:
            raise ConfigError(f"empty seed range {text!r}")
        return tuple(range(lo_i, hi_i + 1))
    return tuple(int(v) for v in _split(text, "seeds"))


def _split(text, key):
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"{key} must not be empty")
    return items


def _convert(kind, raw: str, key: str, parser, section):
    try:
        if kind is int:
            return int(raw)
        if kind is bool:
            return parser.getboolean(section, key)
        if kind == "ints":
            return tuple(int(v) for v in _split(raw, key))
        if kind == "strs":
            return tuple(v.upper() for v in _split(raw, key))
        if kind == "seeds":
            return parse_seeds(raw)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    return raw.strip()


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = [f"[{s}]" for s in parser.sections() if s not in SCHEMA]
    for section in parser.sections():
        if section in SCHEMA:
            unknown += [f"{section}.{k}" for k in parser[section] if k not in SCHEMA[section]]
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))

    values = {}
    for section, keys in SCHEMA.items():
        if not parser.has_section(section):
            continue
        for key, kind in keys.items():
            if key in parser[section]:
                values[_FIELD.get(key, key)] = _convert(kind, parser[section][key], key,
                                                        parser, section)
    if "study" not in values:
        raise ConfigError("[study] name is required")
    preset = values.pop("preset", None)
    if "bounds_case" in values:
        values["bounds_case"] = values["bounds_case"].upper()
    try:
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            study = values.pop("study")
            return ExperimentConfig.preset(preset, study, **values)
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())


def dump_config(config: ExperimentConfig) -> str:
    """Canonical INI text; ``parse_config(dump_config(c)) == c``."""
    def join(values):
        return ", ".join(str(v) for v in values)

    return "\n".join([
        "[study]",
        f"name = {config.study}",
        f"bounds_case = {config.bounds_case}",
        f"record_timing = {'yes' if config.record_timing else 'no'}",
        "",
        "[budget]",
        f"solutions = {config.solutions}",
        f"generations = {config.generations}",
        f"epochs = {config.epochs}",
        "",
        "[grid]",
        f"bins = {join(config.bins)}",
        f"cases = {join(config.cases)}",
        f"pareto_cases = {join(config.pareto_cases)}",
        f"latent_dims = {join(config.latent_dims)}",
        "",
        "[replicates]",
        f"seeds = {join(config.seeds)}",
        "",
    ])
