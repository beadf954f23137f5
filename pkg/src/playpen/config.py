"""Run configuration: one JSON document shared by the CLI and the server."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .social import SPConfig
from .world import DEFAULT_EPISODE_LENGTH

DEFAULT_PORT = 5865


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    episode_length: int = DEFAULT_EPISODE_LENGTH
    sp: SPConfig = field(default_factory=SPConfig)
    imagination_variant: str = "cgh"
    # Episode index at which the goal generator starts imagining; None never.
    imagination_enabled_from: int | None = 0
    log_path: str | None = None
    port: int = DEFAULT_PORT

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "episode_length": self.episode_length,
            "sp": self.sp.to_dict(),
            "imagination": {
                "variant": self.imagination_variant,
                "enabled_from": self.imagination_enabled_from,
            },
            "log_path": self.log_path,
            "port": self.port,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        imagination = data.get("imagination", {})
        return cls(
            seed=int(data.get("seed", 0)),
            episode_length=int(data.get("episode_length", DEFAULT_EPISODE_LENGTH)),
            sp=SPConfig.from_dict(data.get("sp", {})),
            imagination_variant=imagination.get("variant", "cgh"),
            imagination_enabled_from=imagination.get("enabled_from", 0),
            log_path=data.get("log_path"),
            port=int(data.get("port", DEFAULT_PORT)),
        )

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
