"""
Argument parsing and dispatch for ``python -m cacgen``.
"""

import argparse
import logging
from typing import List, Optional

from ..config import configure_logging, get_settings_summary
from .commands import cmd_ablate, cmd_benchmark, cmd_eval, cmd_generate

logger = logging.getLogger(__name__)

MODES = ("baseline", "cac", "substring", "avg_outputs", "concat")


def _sampling_flags(parser: argparse.ArgumentParser, with_mode: bool = True) -> None:
    group = parser.add_argument_group("sampling")
    group.add_argument("--steps", type=int, help="sampler steps T (default 50)")
    group.add_argument("--md-ratio", type=float, help="share of the noisiest steps run region-wise (default 0.4)")
    group.add_argument("--lambda-caption", type=float, help="lambda on caption tokens (default: the scene's)")
    group.add_argument("--lambda-region", type=float, help="lambda on region tokens (default: the scene's)")
    if with_mode:
        group.add_argument("--mode", choices=MODES, help="cross-attention variant outside MD steps (default cac)")
    group.add_argument("--seed", type=int, help="sampling seed")
    group.add_argument("--eta", type=float, help="DDIM eta (default 0, deterministic)")
    group.add_argument("--pad-to", type=int, help="pad the concatenated prompt to this many tokens")
    group.add_argument("--mask-mode", choices=("nearest", "bilinear"), help="mask pyramid resampling")
    group.add_argument("--renormalize", action="store_true", help="renormalize masked attention rows")
    group.add_argument("--md-branch-cac", action="store_true", help="use CAC inside MD region branches")
    group.add_argument("--substring-literal-sum", action="store_true", help="substring mode adds masked maps")
    group.add_argument("--masked-average", action="store_true", help="mask the avg_outputs prompts")
    group.add_argument("--lambda-region-specials", action="store_true", help="apply lambda_region to region BOS/EOS")
    group.add_argument("--threads", type=int, help="concurrent images (default CACGEN_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cacgen", description="Localized text-to-image generation with Cross Attention Control"
    )
    parser.add_argument("--log-level", help="logging level (default CACGEN_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate images from a scene file")
    gen.add_argument("scene", nargs="?", help="scene JSON file")
    gen.add_argument("--replay", help="regenerate the run described by a manifest (file or run dir)")
    gen.add_argument("--seeds", help="comma-separated seeds (overrides --seed)")
    gen.add_argument("--out", help="run directory (default <output_dir>/<scene name>)")
    gen.add_argument("--ppm", action="store_true", help="also write binary PPM images")
    gen.add_argument("--dump-attention", action="store_true", help="write attention records per image")
    gen.add_argument("--heatmap-stride", type=int, help="write attention heatmaps every N steps")
    _sampling_flags(gen)
    gen.set_defaults(handler=cmd_generate)

    ev = sub.add_parser("eval", help="score a run directory against ground truth")
    ev.add_argument("run_dir", help="directory holding manifest.json")
    ev.add_argument("gt", help="ground-truth JSON file")
    ev.add_argument("--out", help="metrics report path (default <run_dir>/metrics.json)")
    ev.set_defaults(handler=cmd_eval)

    ab = sub.add_parser("ablate", help="MD-ratio sweep with and without CAC")
    ab.add_argument("scene", nargs="?", help="scene JSON file (default: synthetic box scenes)")
    ab.add_argument("--ratios", default="0,0.2,0.4,0.6,0.8,1.0", help="comma-separated MD ratios")
    ab.add_argument("--seeds", help="comma-separated seeds per scene")
    ab.add_argument("--count", type=int, default=8, help="synthetic scenes when no scene file is given")
    ab.add_argument("--out", help="output directory (default <output_dir>/ablation)")
    ab.add_argument("--no-plot", action="store_true", help="skip the SVG plot")
    _sampling_flags(ab, with_mode=False)
    ab.set_defaults(handler=cmd_ablate)

    bench = sub.add_parser("benchmark", help="synthetic benchmark, with and without CAC")
    bench.add_argument("--kind", choices=("boxes", "composition", "labelmap"), default="boxes")
    bench.add_argument("--count", type=int, default=50, help="number of scenes")
    bench.add_argument("--out", help="output directory (default <output_dir>/benchmark_<kind>)")
    bench.add_argument("--save-images", action="store_true", help="write every generated image")
    _sampling_flags(bench, with_mode=False)
    bench.set_defaults(handler=cmd_benchmark)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(f"Running command '{args.command}' with settings {get_settings_summary()}")
    return args.handler(args)
