"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Keys are lowercase with dots or
underscores; hyperparameters use ``hp.<kind>.<name>``. Command-line flags
override file values.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .chain import DEFAULT_LABELS
from .classifiers import KINDS

MODES = ("simplified", "raw")


class ConfigError(ValueError):
    pass


def parse_value(text: str) -> Any:
    """Python-literal values where they parse (ints, floats, None, True); text otherwise."""
    t = text.strip()
    if t.lower() in ("none", "null"):
        return None
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return ast.literal_eval(t)
    except (ValueError, SyntaxError):
        return t


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().lower()] = v.strip()
    return out


def _csv_list(v) -> list[str]:
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v]
    return [p.strip() for p in str(v).split(",") if p.strip()]


@dataclass
class RunConfig:
    mode: str = "simplified"
    models: list[str] = field(default_factory=lambda: list(KINDS))
    chain: bool = True
    chain_base: str = "random_forest"
    chain_feed: str = "hard"
    train_fraction: float = 0.7
    stratify_by: Optional[str] = None
    seed: int = 0
    ngram: int = 2
    workers: int = 1
    skip_bad: bool = False
    figures: bool = True
    hyperparams: dict[str, dict[str, Any]] = field(default_factory=dict)
    fetch_base_url: Optional[str] = None
    fetch_rate_limit: Optional[float] = None

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for k in self.models:
            if k not in KINDS:
                raise ConfigError(f"unknown model kind {k!r}")
        if self.chain_base not in KINDS:
            raise ConfigError(f"unknown chain base kind {self.chain_base!r}")
        if self.ngram != 2:
            raise ConfigError("only ngram = 2 is supported")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        return self

    def update(self, values: dict[str, Any]) -> "RunConfig":
        """Apply ``values`` (already-split keys); None means 'not given'."""
        for key, val in values.items():
            if val is None:
                continue
            key = key.replace("-", "_")
            if key.startswith("hp."):
                try:
                    _, kind, name = key.split(".", 2)
                except ValueError:
                    raise ConfigError(f"hyperparameter key {key!r} must look like hp.<kind>.<name>") from None
                self.hyperparams.setdefault(kind, {})[name] = parse_value(val) if isinstance(val, str) else val
                continue
            key = key.replace(".", "_")
            if key == "models":
                self.models = _csv_list(val)
            elif key in ("chain", "skip_bad", "figures"):
                setattr(self, key, val if isinstance(val, bool) else bool(parse_value(str(val))))
            elif key in ("seed", "ngram", "workers"):
                setattr(self, key, int(val))
            elif key in ("train_fraction", "fetch_rate_limit"):
                setattr(self, key, float(val))
            elif key in ("mode", "chain_base", "chain_feed", "stratify_by", "fetch_base_url"):
                setattr(self, key, None if str(val).lower() == "none" else str(val))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "models": list(self.models),
            "chain": self.chain,
            "chain_base": self.chain_base,
            "chain_feed": self.chain_feed,
            "train_fraction": self.train_fraction,
            "stratify_by": self.stratify_by,
            "seed": self.seed,
            "ngram": self.ngram,
            "hyperparams": {k: dict(sorted(v.items())) for k, v in sorted(self.hyperparams.items())},
        }


def hp_pairs(items) -> dict[str, str]:
    """``["random_forest.n_trees=50"]`` -> ``{"hp.random_forest.n_trees": "50"}``."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--hp expects kind.name=value, got {item!r}")
        k, v = item.split("=", 1)
        out["hp." + k.strip()] = v.strip()
    return out


__all__ = ["ConfigError", "DEFAULT_LABELS", "MODES", "RunConfig", "hp_pairs", "parse_value", "read_config"]
