"""
Command-line driver: generate, eval, ablate and benchmark.
"""

from .batch import AblationRow, Generation, ablation_direction, ablation_rows, generate_batch, run_batch, score_generations
from .commands import cmd_ablate, cmd_benchmark, cmd_eval, cmd_generate, evaluate_run, run_benchmark, sampler_config
from .imageio import read_image, read_label_png, to_uint8, write_png, write_ppm
from .manifest import MANIFEST_NAME, ImageEntry, RunManifest, load_manifest
from .parser import build_parser, main

__all__ = [
    "AblationRow",
    "Generation",
    "ablation_direction",
    "ablation_rows",
    "generate_batch",
    "run_batch",
    "score_generations",
    "cmd_generate",
    "cmd_eval",
    "cmd_ablate",
    "cmd_benchmark",
    "evaluate_run",
    "run_benchmark",
    "sampler_config",
    "read_image",
    "read_label_png",
    "to_uint8",
    "write_png",
    "write_ppm",
    "MANIFEST_NAME",
    "ImageEntry",
    "RunManifest",
    "load_manifest",
    "build_parser",
    "main",
]
