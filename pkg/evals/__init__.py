"""
Evaluation Suite for cacgen
===========================

This package contains evaluations for testing:
- Numerics, text, layout and attention kernels
- The CAC/MD sampler and its variants
- Detection, segmentation, KID and composition metrics
- Synthetic benchmarks and the command-line driver
- End-to-end acceptance properties and trends

Usage:
    # Run all evaluations
    python -m evals.run_all_evals

    # Run specific evaluation suites
    python -m evals.attention_evals
    python -m evals.diffusion_evals
    python -m evals.acceptance_evals

    # Or through pytest
    pytest
"""

__version__ = "1.0.0"
