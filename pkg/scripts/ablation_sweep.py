import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from config.configuration import RunConfig
from config.loader import get_str_env, load_run_config, merge_overrides
from synthdata.scene import generate_sample
from trainer.loop import train_loop

logging.basicConfig(
    level=getattr(logging, get_str_env("C2F_LOG_LEVEL", "INFO").upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

# run name -> {section: {field: value}}
DECODER_VARIANTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "cascaded": {"model": {"decoder_mode": "cascaded"}},
    "parallel": {"model": {"decoder_mode": "parallel"}},
    "no-cross-attention": {"model": {"cross_attention": False}},
    "order-RIS": {"model": {"task_order": "RIS"}},
}

MASKING_VARIANTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "SG-IG-RD": {"mask": {"schedule": {"preset": "SG-IG-RD"}}},
    "IG-SG-RD": {"mask": {"schedule": {"preset": "IG-SG-RD"}}},
    "RD-IG-SG": {"mask": {"schedule": {"preset": "RD-IG-SG"}}},
    "random": {"train": {"masking_mode": "random"}},
    "semantic": {"train": {"masking_mode": "semantic"}},
    "instance": {"train": {"masking_mode": "instance"}},
}


@dataclass
class SweepResult:
    group: str
    name: str
    elapsed_sec: float
    steps: int
    first_total: float
    final_total: float
    final_loss_s: float
    final_loss_i: float
    final_loss_r: float


def run_variant(base: RunConfig, overrides: Dict[str, Dict[str, Any]], samples: list, out_dir: str) -> Dict:
    cfg = merge_overrides(base, overrides)
    start = time.perf_counter()
    result = train_loop(samples, cfg, out_dir)
    elapsed = time.perf_counter() - start
    first, last = result.history[0], result.history[-1]
    return {
        "elapsed_sec": elapsed,
        "steps": last.step,
        "first_total": first.total,
        "final_total": last.total,
        "final_loss_s": last.loss_s,
        "final_loss_i": last.loss_i,
        "final_loss_r": last.loss_r,
    }


def summarize_results(results: List[SweepResult]) -> Dict:
    if not results:
        return {}
    avg = lambda xs: sum(xs) / len(xs)
    summary = {}
    for group in sorted({r.group for r in results}):
        members = [r for r in results if r.group == group]
        summary[group] = {
            "avg_final_total": avg([r.final_total for r in members]),
            "avg_elapsed_sec": avg([r.elapsed_sec for r in members]),
            "best": min(members, key=lambda r: r.final_total).name,
        }
    return summary


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", type=str, help="Base run configuration (JSON or YAML)")
    parser.add_argument("--output", type=str, default="outputs/ablation_sweep.json", help="Output JSON path")
    parser.add_argument("--samples", type=int, default=8, help="Synthetic samples per run")
    parser.add_argument("--steps", type=int, default=50, help="Optimizer steps per run")
    parser.add_argument("--only", choices=["decoder", "masking"], help="Run a single group")
    args = parser.parse_args()

    base = merge_overrides(load_run_config(args.config), {"train": {"max_steps": args.steps}})
    samples = [generate_sample(base.scene, i) for i in range(args.samples)]
    groups = {"decoder": DECODER_VARIANTS, "masking": MASKING_VARIANTS}
    if args.only:
        groups = {args.only: groups[args.only]}

    results: List[SweepResult] = []
    with tempfile.TemporaryDirectory() as scratch:
        for group, variants in groups.items():
            for name, overrides in variants.items():
                logger.info("Running %s/%s", group, name)
                stats = run_variant(base, overrides, samples, os.path.join(scratch, group, name))
                results.append(SweepResult(group=group, name=name, **stats))

    payload = {
        "summary": summarize_results(results),
        "results": [asdict(r) for r in results],
    }

    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)

    print(json.dumps(payload["summary"], ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
