import numpy as np
import pytest
import torch

torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def build_tiny_dataset(root, count, seed=0, train_count=None):
    """Synthetic corpus -> manifest path, for tests that need real files."""
    from facehall.data import ingest_manifest, split_dataset, write_manifest
    from facehall.synthetic import make_synthetic_dataset

    image_dir, attr_path = make_synthetic_dataset(root / "data", count, seed=seed)
    records = ingest_manifest(attr_path, image_dir)
    if train_count is None:
        train_count = count
    train, test = split_dataset(records, train_count=train_count, seed=seed)
    manifest = root / "manifest.jsonl"
    write_manifest(train + test, manifest)
    return manifest


def micro_train_config(out_dir, **overrides):
    """Smallest config that still exercises every training code path."""
    from facehall.trainer import TrainConfig

    base = dict(
        stage_epochs=(1, 1, 1),
        batch_size=4,
        n_critic=2,
        seed=0,
        checkpoint_every=0,
        output_dir=str(out_dir),
        base_channels=8,
        critic_channels=8,
        classifier_channels=8,
        residual_blocks_per_stage=1,
        extractor_kind="tiny_random",
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def fixture_checkpoint(tmp_path_factory):
    """A real stage-3 checkpoint from a tiny end-to-end run; shared per session."""
    from facehall.synthetic import make_fixture_checkpoint

    root = tmp_path_factory.mktemp("fixture_ckpt")
    return make_fixture_checkpoint(root, seed=0)
