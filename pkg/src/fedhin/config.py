"""Run configuration: flat key=value files with validated defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    eps1: float = 1.0
    eps2: float = 1.0
    n_shared: int = 20
    dim: int = 64
    lr: float = 0.01
    batch: int = 32
    rounds: int = 300
    eval_every: int = 10
    patience: int = 50
    neg_per_pos: int = 1
    pseudo_items: int = 2
    ldp_clip: float = 0.2
    ldp_noise: float = 0.1
    max_neighbors: int = 64
    seed: int = 0
    meta_paths_user: str = "U-B-U"
    meta_paths_item: str = "B-U-B"
    mode: str = "two-stage"

    def __post_init__(self):
        positive = ["eps1", "eps2", "n_shared", "dim", "lr", "batch", "eval_every",
                    "neg_per_pos", "ldp_clip", "max_neighbors"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ["rounds", "patience", "pseudo_items", "ldp_noise"]:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.mode not in ("two-stage", "plain-rr"):
            raise ConfigError(f"mode must be 'two-stage' or 'plain-rr', got {self.mode!r}")
        if not self.user_paths or not self.item_paths:
            raise ConfigError("meta path lists must be non-empty")

    @property
    def user_paths(self) -> list[str]:
        return [p.strip() for p in self.meta_paths_user.split(",") if p.strip()]

    @property
    def item_paths(self) -> list[str]:
        return [p.strip() for p in self.meta_paths_item.split(",") if p.strip()]


def parse_config(path) -> RunConfig:
    """Read a ``key=value`` file; unknown keys and bad types are errors."""
    types = {f.name: f.type for f in fields(RunConfig)}
    casts = {"float": float, "int": int, "str": str}
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in types:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
            try:
                values[key] = casts[types[key]](raw)
            except ValueError:
                raise ConfigError(
                    f"{path}:{ln}: key {key!r} expects {types[key]}, got {raw!r}"
                ) from None
    return RunConfig(**values)
