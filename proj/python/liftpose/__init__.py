"""Python interface to the liftpose C++ core."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Optional

try:
    import _liftpose as _core
except ImportError:
    from . import _liftpose as _core

_exported = [name for name in dir(_core) if not name.startswith("_")]
globals().update({name: getattr(_core, name) for name in _exported})

__all__ = _exported + ["config", "train_run", "stability_study"]


def config(profile: str = "desk", **overrides: Any) -> dict:
    """Training configuration of a named profile with top-level keys replaced."""
    cfg = json.loads(_core.default_config(profile))
    for key, value in overrides.items():
        if key not in cfg:
            raise _core.ConfigError(f"unknown training option '{key}'")
        cfg[key] = value
    return cfg


def train_run(data: str | Path, cfg: Optional[dict] = None, *, eval: str | Path | None = None,
              out: str | Path = "", profile: str = "desk") -> dict:
    return _core.train(str(data), json.dumps(cfg or {}), profile, None if eval is None else str(eval), str(out))


def stability_study(data: str | Path, seeds: Iterable[int], cfg: Optional[dict] = None, *,
                    eval: str | Path | None = None, window: tuple[int, int] | None = None,
                    out: str | Path = "", profile: str = "desk", jobs: int = 0) -> dict:
    return _core.stability(str(data), list(seeds), json.dumps(cfg or {}), profile,
                           None if eval is None else str(eval), window, str(out), jobs)
