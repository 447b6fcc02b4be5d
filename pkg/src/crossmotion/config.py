"""Run configuration: one JSON document, unknown keys rejected."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Every tunable of the pipeline, with desk-scale defaults.

    The weights and step counts are not taken from any reference setup; they
    are calibrated for the toy dataset and are all overridable.
    """

    seed: int = 0

    # dataset
    data_path: str = "data/toy.umo"
    manifest_path: str = ""  # defaults to data_path + ".manifest.json"
    split_seed: int = 0
    species_count: int = 10
    records_per_combo: int = 25
    holdout_count: int = 2
    normalize_features: bool = True

    # shared widths
    latent_dim: int = 64
    pose_latent_dim: int = 16
    cond_dim: int = 64
    text_dim: int = 64

    # T-pose prior (graph VAE over bone lengths)
    kl_weight: float = 1e-3
    tpose_hidden: int = 64
    tpose_lr: float = 1e-3
    tpose_steps: int = 1500
    tpose_batch: int = 8

    # motion autoencoder
    ae_channels: int = 128
    morph_recon_weight: float = 1.0
    ae_lr: float = 1e-3
    ae_steps: int = 2000
    ae_batch: int = 16

    # morphology critic
    critic_hidden: int = 128
    critic_lr: float = 1e-3
    critic_steps: int = 1500
    critic_batch: int = 16

    # masked generator
    gen_blocks: int = 4
    gen_heads: int = 4
    morph_guide_weight: float = 1.0
    text_dropout: float = 0.1
    gen_lr: float = 5e-4
    gen_steps: int = 2500
    gen_batch: int = 16
    fill_iterations: int = 8  # iterative unmasking rounds at inference
    ode_steps: int = 16  # Euler steps per generated position
    guidance_scale: float = 3.0

    # retrieval matcher used by the metric suite
    matcher_dim: int = 32
    matcher_hidden: int = 256
    matcher_lr: float = 1e-3
    matcher_steps: int = 800
    matcher_batch: int = 32
    matcher_temperature: float = 0.07

    run_dir: str = "runs"

    def __post_init__(self) -> None:
        for name in ("tpose_lr", "ae_lr", "critic_lr", "gen_lr", "matcher_lr"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("latent_dim", "pose_latent_dim", "cond_dim", "text_dim",
                     "fill_iterations", "ode_steps", "gen_blocks", "gen_heads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0.0 <= self.text_dropout <= 1.0):
            raise ConfigError("text_dropout must be in [0, 1]")

    @property
    def resolved_manifest_path(self) -> str:
        return self.manifest_path or self.data_path + ".manifest.json"

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
