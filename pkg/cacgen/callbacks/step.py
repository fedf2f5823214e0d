"""
Per-step callbacks: step timing and a bounded step history.
"""

import logging
import time
from typing import Optional

from .context import SamplingContext

logger = logging.getLogger(__name__)

STEP_HISTORY_LIMIT = 50


def before_step_callback(context: Optional[SamplingContext], step: int, phase: str) -> None:
    """Record the start time of step ``step`` (``phase`` is ``md`` or the attention mode)."""
    try:
        if context is None:
            return
        context.state["step_start_time"] = time.perf_counter()
        context.state["current_step"] = step
        context.state["current_phase"] = phase
    except Exception as e:
        logger.error(f"Error in before_step_callback: {e}")


def after_step_callback(context: Optional[SamplingContext], step: int, phase: str) -> None:
    """Store the step duration and append it to ``step_history``."""
    try:
        if context is None:
            return
        start = context.state.get("step_start_time", time.perf_counter())
        duration = time.perf_counter() - start
        context.state["steps_completed"] = context.state.get("steps_completed", 0) + 1
        logger.debug(f"Step {step} ({phase}) took {duration * 1000:.1f} ms")
        _track_step(context, step, phase, duration)
    except Exception as e:
        logger.error(f"Error in after_step_callback: {e}")


def _track_step(context: SamplingContext, step: int, phase: str, duration: float) -> None:
    try:
        history = context.state.setdefault("step_history", [])
        history.append({"step": step, "phase": phase, "duration": duration})
        # Keep only recent history (last 50 steps)
        if len(history) > STEP_HISTORY_LIMIT:
            context.state["step_history"] = history[-STEP_HISTORY_LIMIT:]
    except Exception as e:
        logger.debug(f"Could not track step history: {e}")
