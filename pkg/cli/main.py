"""
Command-line surface.

Every command resolves its configuration as flags > config file > defaults,
prints the effective configuration as JSON, then runs. Exit codes: 0 success,
1 usage or validation error, 2 I/O or file-format error, 3 numeric failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from config.configuration import DecoderMode, MaskingMode, Precision, RunConfig
from config.loader import get_bool_env, get_int_env, get_str_env, load_run_config, merge_overrides
from masking.plan import build_mask_plan
from model.export import pixel_mask, render_attention, save_attention, write_reconstruction
from model.network import MultiGranularMAE
from numerics.precision import precision
from objective.canonical import canonicalize_instances
from synthdata.codec import write_ppm
from synthdata.dataset import Dataset, generate_dataset
from synthdata.scene import MultiGranularSample
from tokenizer.layout import TokenLayout
from trainer.checkpoint import load_checkpoint
from trainer.diagnostics import GRAD_CHECK_TOLERANCE, grad_check_config, model_grad_check
from trainer.loop import train_loop
from utils.decorators import log_io
from utils.errors import C2FError, ContractError, FormatError, NumericError
from utils.images import colorize, shade_masked
from utils.rng import derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(C2FError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _sample_at(dataset: Dataset, index: int) -> MultiGranularSample:
    try:
        return dataset[index]
    except IndexError as exc:
        raise UsageError(f"--index {index}: {exc}") from exc


def _task_order(value: str) -> str:
    letters = value.strip().upper()
    if sorted(letters) != ["I", "R", "S"]:
        raise argparse.ArgumentTypeError(f"task order must be a permutation of S, I, R, got {value!r}")
    return letters


def resolve_config(config_path: Optional[str], overrides: dict[str, dict[str, Any]]) -> RunConfig:
    """File (or $C2F_CONFIG, or nothing) first, then non-empty flag overrides on top."""
    path = config_path or get_str_env("C2F_CONFIG") or None
    cfg = load_run_config(path)
    return merge_overrides(cfg, overrides)


def echo_config(cfg: RunConfig) -> None:
    print(cfg.effective(), flush=True)


def _load_model(ckpt: str) -> tuple[MultiGranularMAE, RunConfig, int]:
    params, state, manifest = load_checkpoint(ckpt)
    cfg = RunConfig.model_validate(manifest.config)
    scene = cfg.scene
    model = MultiGranularMAE(cfg.model, scene.image_size, scene.class_count, scene.k_max, params)
    return model, cfg, state.step


def _check_scene(cfg: RunConfig, dataset: Dataset) -> None:
    if dataset.scene.image_size != cfg.scene.image_size or dataset.scene.class_count != cfg.scene.class_count:
        raise ContractError(
            f"dataset scenes ({dataset.scene.image_size}px, {dataset.scene.class_count} classes) do not match "
            f"the configuration ({cfg.scene.image_size}px, {cfg.scene.class_count} classes)"
        )


@log_io
def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.config, {"scene": {"seed": args.seed}})
    echo_config(cfg)
    manifest = generate_dataset(cfg.scene, args.count, args.out, workers=args.workers)
    print(f"wrote {len(manifest.samples)} samples to {args.out}")
    return EXIT_OK


@log_io
def cmd_pretrain(args: argparse.Namespace) -> int:
    dataset = Dataset(args.data)
    overrides = {
        # the dataset defines the scenes it holds
        "scene": dataset.scene.model_dump(mode="json"),
        "model": {
            "decoder_mode": args.decoder,
            "task_order": args.task_order,
            "cross_attention": False if args.no_cross_attention else None,
        },
        "train": {
            "masking_mode": args.masking,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "base_lr": args.lr,
            "seed": args.seed,
            "max_steps": args.max_steps,
            "precision": args.precision,
        },
    }
    cfg = resolve_config(args.config, overrides)
    echo_config(cfg)
    result = train_loop(dataset, cfg, args.out, resume=args.resume)
    last = result.history[-1] if result.history else None
    if last is not None:
        print(f"step {last.step}: total {last.total:.5f} (S {last.loss_s:.5f}, I {last.loss_i:.5f}, R {last.loss_r:.5f})")
    return EXIT_OK


@log_io
def cmd_reconstruct(args: argparse.Namespace) -> int:
    model, cfg, step = _load_model(args.ckpt)
    echo_config(cfg)
    dataset = Dataset(args.data)
    _check_scene(cfg, dataset)
    sample = _sample_at(dataset, args.index)
    with precision(cfg.train.precision.value):
        plan = build_mask_plan(
            sample,
            cfg.mask,
            model.layout,
            args.u,
            derive_seed(cfg.train.seed, "reconstruct", args.index),
            cfg.scene.class_count,
            cfg.train.masking_mode,
        )
        result = model.forward(sample, plan)
    out = Path(args.out)
    write_reconstruction(out, sample, plan, result, model.layout, cfg.scene.class_count, cfg.scene.k_max)
    plan.save(out / "mask_plan.json")
    print(f"wrote reconstruction of sample {args.index} (checkpoint step {step}) to {out}")
    return EXIT_OK


@log_io
def cmd_attn(args: argparse.Namespace) -> int:
    model, cfg, _ = _load_model(args.ckpt)
    echo_config(cfg)
    dataset = Dataset(args.data)
    _check_scene(cfg, dataset)
    sample = _sample_at(dataset, args.index)
    with precision(cfg.train.precision.value):
        plan = build_mask_plan(
            sample,
            cfg.mask,
            model.layout,
            args.u,
            derive_seed(cfg.train.seed, "attn", args.index),
            cfg.scene.class_count,
            cfg.train.masking_mode,
        )
        weights = model.attention_maps(sample, plan, args.layer, args.head)
        positions = model.embed_visible(sample, plan).source_positions
    out = Path(args.out)
    save_attention(out, weights, positions, args.layer, args.head)
    render_attention(out.with_suffix(".pgm"), weights)
    print(f"wrote {weights.shape[0]}x{weights.shape[1]} attention map to {out}")
    return EXIT_OK


@log_io
def cmd_grad_check(args: argparse.Namespace) -> int:
    overrides = {"decoder_mode": args.decoder} if args.decoder else {}
    if args.no_cross_attention:
        overrides["cross_attention"] = False
    cfg = grad_check_config(**overrides)
    echo_config(cfg)
    error = model_grad_check(args.seed, cfg, max_coords_per_param=args.coords)
    print(f"max relative error: {error:.3e}")
    if not error < GRAD_CHECK_TOLERANCE:
        raise NumericError(f"gradient check failed: {error:.3e} >= {GRAD_CHECK_TOLERANCE:g}")
    return EXIT_OK


@log_io
def cmd_mask_viz(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.config, {"train": {"masking_mode": args.masking}})
    echo_config(cfg)
    dataset = Dataset(args.data)
    _check_scene(cfg, dataset)
    sample = _sample_at(dataset, args.index)
    model_layout = TokenLayout(cfg.scene.image_size, cfg.model.patch_size)
    plan = build_mask_plan(
        sample,
        cfg.mask,
        model_layout,
        args.u,
        derive_seed(cfg.train.seed, "mask-viz", args.index),
        cfg.scene.class_count,
        cfg.train.masking_mode,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bases = {
        "S": colorize(sample.semantic),
        "I": colorize(canonicalize_instances(sample.instance, cfg.scene.k_max)),
        "R": sample.rgb,
    }
    for g, base in bases.items():
        write_ppm(out / f"mask_{g}.ppm", shade_masked(base, pixel_mask(plan.masks[g], model_layout), level=0.25))
    plan.save(out / "mask_plan.json")
    print(f"masked counts {plan.masked_counts} at u={args.u} with alphas {plan.alphas}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="c2f", description="Coarse-to-fine multi-granular masked autoencoder pipeline")
    parser.add_argument(
        "--verbose", action="store_true", default=get_bool_env("C2F_VERBOSE"), help="Log at DEBUG level"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="Generate a synthetic tri-granular dataset")
    p.add_argument("--config", type=str, help="Run configuration (JSON or YAML)")
    p.add_argument("--count", type=int, required=True, help="Number of samples")
    p.add_argument("--out", type=str, required=True, help="Dataset directory")
    p.add_argument("--seed", type=int, help="Scene seed")
    p.add_argument("--workers", type=int, default=get_int_env("C2F_WORKERS", 1), help="Generator threads")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("pretrain", help="Pre-train on a generated dataset")
    p.add_argument("--config", type=str, help="Run configuration (JSON or YAML)")
    p.add_argument("--data", type=str, required=True, help="Dataset directory")
    p.add_argument("--out", type=str, required=True, help="Checkpoint directory")
    p.add_argument("--decoder", choices=[m.value for m in DecoderMode])
    p.add_argument("--masking", choices=[m.value for m in MaskingMode])
    p.add_argument("--task-order", type=_task_order, help="Stage order, e.g. SIR or RIS")
    p.add_argument("--no-cross-attention", action="store_true", help="Decoder stages without cross-attention")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float, help="Base learning rate (scaled by batch/256)")
    p.add_argument("--seed", type=int, help="Training seed")
    p.add_argument("--max-steps", type=int, help="Truncate the run after this many steps")
    p.add_argument("--precision", choices=[m.value for m in Precision])
    p.add_argument("--resume", action="store_true", help="Continue from the checkpoint in --out")
    p.set_defaults(handler=cmd_pretrain)

    p = sub.add_parser("reconstruct", help="Export masked-input / prediction / target images")
    p.add_argument("--ckpt", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--u", type=float, default=1.0, help="Curriculum fraction for the mask plan")
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("attn", help="Export one encoder attention head")
    p.add_argument("--ckpt", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--head", type=int, required=True)
    p.add_argument("--out", type=str, required=True, help="JSON file; a PGM rendering is written beside it")
    p.add_argument("--u", type=float, default=1.0, help="Curriculum fraction for the mask plan")
    p.set_defaults(handler=cmd_attn)

    p = sub.add_parser("grad-check", help="Finite-difference check of the whole miniature model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coords", type=int, default=None, help="Cap on coordinates checked per parameter tensor (default: all)")
    p.add_argument("--decoder", choices=[m.value for m in DecoderMode])
    p.add_argument("--no-cross-attention", action="store_true")
    p.set_defaults(handler=cmd_grad_check)

    p = sub.add_parser("mask-viz", help="Mask overlays per granularity at curriculum fraction u")
    p.add_argument("--config", type=str, help="Run configuration (JSON or YAML)")
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--masking", choices=[m.value for m in MaskingMode])
    p.set_defaults(handler=cmd_mask_viz)
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, C2FError):
        return EXIT_USAGE
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.handler(args)
    except (C2FError, OSError) as exc:
        code = exit_code_for(exc)
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
