import numpy as np
import pytest

from config.configuration import MaskConfig, ModelConfig, RunConfig, SceneConfig, TrainConfig
from numerics.precision import precision
from synthdata.scene import generate_sample


@pytest.fixture
def float64():
    """Run the test body with 64-bit tensors."""
    with precision("float64"):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scene_cfg() -> SceneConfig:
    return SceneConfig()


@pytest.fixture
def sample(scene_cfg):
    return generate_sample(scene_cfg, 0)


@pytest.fixture
def tiny_model_cfg() -> ModelConfig:
    return ModelConfig(patch_size=8, d_enc=16, enc_depth=1, enc_heads=2, d_dec=16, dec_heads=2, ffn_ratio=2)


@pytest.fixture
def tiny_run_cfg(tiny_model_cfg) -> RunConfig:
    """32x32 scenes (N=16 patches) and a one-block model: fast enough for end-to-end runs."""
    return RunConfig(
        scene=SceneConfig(image_size=32, shape_count_range=(1, 3), min_visible_pixels=8),
        mask=MaskConfig(visible_tokens=12),
        model=tiny_model_cfg,
        train=TrainConfig(epochs=3, warmup_epochs=1, batch_size=2, base_lr=0.01, precision="float64"),
    )


@pytest.fixture
def tiny_samples(tiny_run_cfg):
    return [generate_sample(tiny_run_cfg.scene, i) for i in range(4)]
