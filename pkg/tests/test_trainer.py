import math
from collections import OrderedDict

import numpy as np
import pytest

from config.configuration import MaskConfig, RunConfig, TrainConfig
from masking import build_mask_plan, patch_object_flags, schedule_alphas
from model import ModelParams, MultiGranularMAE
from numerics.precision import precision
from numerics.tensor import Tensor
from synthdata.scene import generate_sample
from trainer import (
    OptimState,
    StepPlan,
    clip_by_global_norm,
    global_norm,
    load_checkpoint,
    lr_at,
    optimizer_step,
    plan_for,
    read_manifest,
    read_metrics,
    save_checkpoint,
    step_root,
    steps_per_epoch,
    train_loop,
    train_step,
)
from trainer.diagnostics import OVERFIT_SAMPLES, OVERFIT_STEPS, masked_reconstruction_quality, overfit_config
from utils.errors import CheckpointError, ContractError, NumericError
from utils.rng import derive_seed


def _params(rng):
    return ModelParams(
        OrderedDict(
            [
                ("proj.weight", Tensor(rng.normal(size=(3, 2)), requires_grad=True)),
                ("proj.bias", Tensor(rng.normal(size=2), requires_grad=True)),
                ("mask_token", Tensor(rng.normal(size=2), requires_grad=True)),
            ]
        )
    )


class TestSchedule:
    def test_warmup_then_cosine(self):
        assert lr_at(0, 1.0, 10, 100) == 0.0
        assert lr_at(5, 1.0, 10, 100) == pytest.approx(0.5)
        assert lr_at(10, 1.0, 10, 100) == pytest.approx(1.0)
        assert lr_at(55, 1.0, 10, 100) == pytest.approx(0.5)
        assert lr_at(100, 1.0, 10, 100) == 0.0

    def test_no_warmup(self):
        assert lr_at(0, 2.0, 0, 10) == pytest.approx(2.0)

    def test_monotone_decay(self):
        values = [lr_at(s, 1.0, 3, 30) for s in range(3, 31)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_negative_step(self):
        with pytest.raises(ContractError):
            lr_at(-1, 1.0, 1, 10)

    def test_step_plan(self):
        plan = StepPlan.for_run(TrainConfig(epochs=10, warmup_epochs=2, batch_size=4), 10)
        assert (plan.per_epoch, plan.warmup_steps, plan.total_steps) == (3, 6, 30)
        assert plan.fraction(15) == 0.5

    def test_truncated_plan_keeps_warmup_share(self):
        plan = StepPlan.for_run(TrainConfig(epochs=10, warmup_epochs=2, batch_size=4, max_steps=15), 10)
        assert (plan.warmup_steps, plan.total_steps) == (3, 15)
        assert plan.fraction(15) == 1.0

    def test_peak_lr_scales_with_batch(self):
        assert TrainConfig(base_lr=1e-4, batch_size=512).peak_lr == pytest.approx(2e-4)

    def test_empty_dataset(self):
        with pytest.raises(ContractError):
            steps_per_epoch(0, 4)


class TestAdamW:
    def test_matches_reference(self, float64, rng):
        params = _params(rng)
        cfg = TrainConfig(weight_decay=0.1, betas=(0.9, 0.95), eps=1e-8)
        state = OptimState.zeros_like(params)
        reference = {n: t.data.copy() for n, t in params.items()}
        m = {n: np.zeros_like(p) for n, p in reference.items()}
        v = {n: np.zeros_like(p) for n, p in reference.items()}
        lr = 0.01
        for t in range(1, 11):
            grads = {n: rng.normal(size=p.shape) for n, p in reference.items()}
            optimizer_step(params, grads, state, lr, cfg)
            for n, g in grads.items():
                m[n] = 0.9 * m[n] + 0.1 * g
                v[n] = 0.95 * v[n] + 0.05 * g * g
                if n == "proj.weight":
                    reference[n] = reference[n] * (1.0 - lr * 0.1)
                m_hat = m[n] / (1.0 - 0.9**t)
                v_hat = v[n] / (1.0 - 0.95**t)
                reference[n] = reference[n] - lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert state.step == 10
        for n, t in params.items():
            np.testing.assert_allclose(t.data, reference[n], atol=1e-12, err_msg=n)

    def test_decay_skips_bias_and_mask_token(self, float64, rng):
        params = _params(rng)
        before = {n: t.data.copy() for n, t in params.items()}
        zeros = {n: np.zeros_like(t.data) for n, t in params.items()}
        optimizer_step(params, zeros, OptimState.zeros_like(params), 0.1, TrainConfig(weight_decay=0.5))
        np.testing.assert_allclose(params["proj.weight"].data, before["proj.weight"] * 0.95, atol=1e-15)
        np.testing.assert_array_equal(params["proj.bias"].data, before["proj.bias"])
        np.testing.assert_array_equal(params["mask_token"].data, before["mask_token"])

    def test_non_finite_gradient_changes_nothing(self, float64, rng):
        params = _params(rng)
        before = {n: t.data.copy() for n, t in params.items()}
        state = OptimState.zeros_like(params)
        grads = {n: np.ones_like(t.data) for n, t in params.items()}
        grads["proj.bias"][0] = np.nan
        with pytest.raises(NumericError, match="proj.bias"):
            optimizer_step(params, grads, state, 0.1, TrainConfig())
        assert state.step == 0
        for n, t in params.items():
            np.testing.assert_array_equal(t.data, before[n])

    def test_clipping(self):
        clipped, norm = clip_by_global_norm({"a": np.array([3.0, 0.0]), "b": np.array([4.0])}, 1.0)
        assert norm == 5.0
        np.testing.assert_allclose(clipped["a"], [0.6, 0.0])
        np.testing.assert_allclose(clipped["b"], [0.8])
        assert global_norm(clipped) == pytest.approx(1.0)

    def test_no_clipping_below_threshold(self):
        grads = {"a": np.array([0.3, 0.4])}
        clipped, norm = clip_by_global_norm(grads, 1.0)
        np.testing.assert_array_equal(clipped["a"], grads["a"])
        assert norm == pytest.approx(0.5)


class TestTrainStep:
    def test_zero_lr_repeats(self, float64, tiny_run_cfg, tiny_samples):
        cfg = tiny_run_cfg
        model = MultiGranularMAE(cfg.model, 32, cfg.scene.class_count, cfg.scene.k_max, seed=0)
        state = OptimState.zeros_like(model.params)
        first = train_step(tiny_samples[:2], model, state, 0.3, 0.0, cfg, step_root(0, 0))
        second = train_step(tiny_samples[:2], model, state, 0.3, 0.0, cfg, step_root(0, 0))
        assert first == second
        assert state.step == 2

    def test_losses_are_positive(self, float64, tiny_run_cfg, tiny_samples):
        cfg = tiny_run_cfg
        model = MultiGranularMAE(cfg.model, 32, cfg.scene.class_count, cfg.scene.k_max, seed=0)
        l_s, l_i, l_r, total = train_step(
            tiny_samples[:2], model, OptimState.zeros_like(model.params), 0.0, 1e-3, cfg, step_root(0, 0)
        )
        assert l_s > 0 and l_i > 0 and l_r > 0
        assert total == pytest.approx(l_s + l_i + l_r)

    def test_empty_batch(self, float64, tiny_run_cfg):
        cfg = tiny_run_cfg
        model = MultiGranularMAE(cfg.model, 32, cfg.scene.class_count, cfg.scene.k_max)
        with pytest.raises(ContractError):
            train_step([], model, OptimState.zeros_like(model.params), 0.0, 1e-3, cfg, 0)


class TestTrainLoop:
    def test_metrics_and_summary(self, tiny_run_cfg, tiny_samples, tmp_path):
        result = train_loop(tiny_samples, tiny_run_cfg, tmp_path)
        records = read_metrics(tmp_path / "metrics.jsonl")
        assert [r["step"] for r in records] == list(range(1, 7))
        assert set(records[0]) == {"step", "epoch", "lr", "u", "alpha_i", "alpha_s", "loss_s", "loss_i", "loss_r", "total"}
        for record in records:
            expected = schedule_alphas(record["u"], tiny_run_cfg.mask.schedule)
            assert (record["alpha_i"], record["alpha_s"]) == pytest.approx(expected)
        assert records[0]["lr"] == 0.0 and records[0]["u"] == 0.0
        assert result.state.step == 6
        summary = (tmp_path / "summary.md").read_text(encoding="utf-8")
        assert "Pre-training run summary" in summary and "| last | 6 |" in summary
        assert read_manifest(tmp_path).step == 6

    def test_is_deterministic(self, tiny_run_cfg, tiny_samples, tmp_path):
        train_loop(tiny_samples, tiny_run_cfg, tmp_path / "a")
        train_loop(tiny_samples, tiny_run_cfg, tmp_path / "b")
        assert (tmp_path / "a" / "params.bin").read_bytes() == (tmp_path / "b" / "params.bin").read_bytes()
        assert (tmp_path / "a" / "metrics.jsonl").read_text() == (tmp_path / "b" / "metrics.jsonl").read_text()

    def test_resume_replays_the_same_run(self, tiny_run_cfg, tiny_samples, tmp_path):
        whole = train_loop(tiny_samples, tiny_run_cfg, tmp_path / "whole")
        train_loop(tiny_samples, tiny_run_cfg, tmp_path / "split", stop_at_step=3)
        assert read_manifest(tmp_path / "split").step == 3
        resumed = train_loop(tiny_samples, tiny_run_cfg, tmp_path / "split", resume=True)
        assert resumed.state.step == 6
        for (name, a), (_, b) in zip(whole.model.params.items(), resumed.model.params.items()):
            np.testing.assert_allclose(a.data, b.data, atol=1e-10, err_msg=name)
        whole_records = read_metrics(tmp_path / "whole" / "metrics.jsonl")
        split_records = read_metrics(tmp_path / "split" / "metrics.jsonl")
        assert [r["total"] for r in split_records] == pytest.approx([r["total"] for r in whole_records], abs=1e-10)

    def test_training_reduces_loss(self, tiny_run_cfg, tiny_samples, tmp_path):
        cfg = tiny_run_cfg.model_copy(
            update={"train": tiny_run_cfg.train.model_copy(update={"epochs": 20, "batch_size": 4, "base_lr": 0.5})}
        )
        result = train_loop(tiny_samples[:1] * 4, cfg, tmp_path)
        totals = [m.total for m in result.history]
        assert np.mean(totals[-3:]) < np.mean(totals[:3])


class TestCheckpoint:
    def test_round_trip_is_byte_identical(self, tiny_run_cfg, tiny_samples, tmp_path):
        train_loop(tiny_samples, tiny_run_cfg, tmp_path / "run", stop_at_step=2)
        params, state, manifest = load_checkpoint(tmp_path / "run", tiny_run_cfg)
        assert state.step == 2 and manifest.dtype == "float64"
        save_checkpoint(tmp_path / "copy", params, state, tiny_run_cfg, epoch=manifest.epoch)
        for blob in ("params.bin", "optim.bin", "manifest.json"):
            assert (tmp_path / "run" / blob).read_bytes() == (tmp_path / "copy" / blob).read_bytes()

    def test_truncated_blob(self, tiny_run_cfg, tiny_samples, tmp_path):
        train_loop(tiny_samples, tiny_run_cfg, tmp_path, stop_at_step=1)
        blob = tmp_path / "params.bin"
        data = blob.read_bytes()
        blob.write_bytes(data[:-8])
        with pytest.raises(CheckpointError) as info:
            load_checkpoint(tmp_path)
        assert f"params.bin: expected {len(data)} bytes, found {len(data) - 8}" in info.value.diff

    def test_config_mismatch_is_listed(self, tiny_run_cfg, tiny_samples, tmp_path):
        train_loop(tiny_samples, tiny_run_cfg, tmp_path, stop_at_step=1)
        wider = tiny_run_cfg.model_copy(update={"model": tiny_run_cfg.model.model_copy(update={"d_dec": 32})})
        with pytest.raises(CheckpointError) as info:
            load_checkpoint(tmp_path, wider)
        assert any(line.startswith("mask_token: expected shape [32]") for line in info.value.diff)

    def test_missing_tensor(self, tiny_run_cfg, tiny_samples, tmp_path):
        train_loop(tiny_samples, tiny_run_cfg, tmp_path, stop_at_step=1)
        no_ca = tiny_run_cfg.model_copy(update={"model": tiny_run_cfg.model.model_copy(update={"cross_attention": False})})
        with pytest.raises(CheckpointError) as info:
            load_checkpoint(tmp_path, no_ca)
        assert any(line.startswith("unexpected decoder.S.0.cross_attn.q.weight") for line in info.value.diff)

    def test_malformed_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text("[]", encoding="utf-8")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path)


class TestCurriculum:
    def test_object_share_follows_the_schedule(self, tiny_model_cfg):
        cfg = RunConfig(mask=MaskConfig(visible_tokens=162), model=tiny_model_cfg)
        model = MultiGranularMAE(cfg.model, 64, cfg.scene.class_count, cfg.scene.k_max)
        samples = [generate_sample(cfg.scene, i) for i in range(30)]

        def object_share(u):
            hits = total = 0
            for step, sample in enumerate(samples):
                flags = patch_object_flags(sample, 8, cfg.mask.object_patch_threshold)
                plan = plan_for(sample, cfg, model, u, step)
                for g in "SIR":
                    hits += int(plan.masks[g][flags].sum())
                    total += int(plan.masks[g].sum())
            return hits / total

        instance_phase, blended, random_phase = object_share(0.6), object_share(0.75), object_share(0.9)
        assert instance_phase > blended > random_phase


class TestReconstructionQuality:
    def test_scores_masked_patches(self, tiny_run_cfg, tiny_samples):
        with precision("float64"):
            model = MultiGranularMAE(tiny_run_cfg.model, 32, 5, 8, seed=0)
        quality = masked_reconstruction_quality(model, tiny_samples, tiny_run_cfg, seed=4)
        assert quality.rgb_mse > 0.0 and 0.0 <= quality.semantic_accuracy <= 1.0
        masked = 0
        for i, sample in enumerate(tiny_samples):
            plan = build_mask_plan(
                sample, tiny_run_cfg.mask, model.layout, 1.0, derive_seed(4, "quality", i), 5
            )
            masked += int(plan.masks["S"].sum())
        assert quality.semantic_patches == masked
        assert masked_reconstruction_quality(model, tiny_samples, tiny_run_cfg, seed=4) == quality


@pytest.mark.slow
class TestOverfit:
    @pytest.fixture(scope="class")
    def samples(self):
        scene = RunConfig().scene
        return [generate_sample(scene, i) for i in range(OVERFIT_SAMPLES)]

    def test_cascaded_decoder_memorizes(self, samples, tmp_path):
        cfg = overfit_config()
        result = train_loop(samples, cfg, tmp_path)
        assert len(result.history) == OVERFIT_STEPS
        initial = result.history[0].total
        final = np.mean([m.total for m in result.history[-10:]])
        assert final <= 0.1 * initial
        quality = masked_reconstruction_quality(result.model, samples, cfg)
        assert quality.rgb_mse < 0.01
        assert quality.semantic_accuracy > 0.95

    def test_parallel_decoder_completes(self, samples, tmp_path):
        result = train_loop(samples, overfit_config(decoder_mode="parallel"), tmp_path)
        assert len(result.history) == OVERFIT_STEPS
        assert all(math.isfinite(m.total) for m in result.history)
