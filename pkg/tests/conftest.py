import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crossmotion.config import RunConfig
from crossmotion.training import build_dataset, prepare_data


def make_tiny_cfg(**overrides) -> RunConfig:
    base = dict(
        seed=0,
        species_count=4,
        records_per_combo=1,
        holdout_count=1,
        ae_channels=16,
        latent_dim=16,
        tpose_hidden=16,
        pose_latent_dim=8,
        critic_hidden=24,
        gen_blocks=1,
        gen_heads=2,
        matcher_hidden=32,
        matcher_dim=8,
        fill_iterations=2,
        ode_steps=2,
    )
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def tiny_cfg():
    return make_tiny_cfg()


@pytest.fixture(scope="session")
def tiny_data(tiny_cfg):
    records, split, stats, topo, holdout = build_dataset(tiny_cfg)
    return prepare_data(tiny_cfg, records, split, stats, topo, holdout)
