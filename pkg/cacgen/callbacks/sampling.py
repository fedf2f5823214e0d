"""
Sampling lifecycle callbacks.

These hooks run around a whole sampling run for logging and timing. They
never raise: a failing callback is logged and sampling continues.
"""

import logging
import time
from typing import Optional

from .context import SamplingContext

logger = logging.getLogger(__name__)


def before_sample_callback(context: Optional[SamplingContext]) -> None:
    """
    Callback executed before a sampling run starts.

    Args:
        context: The run's sampling context (may be None)
    """
    try:
        if context is None:
            return
        logger.info(f"Sampling started: run={context.run_id}, seed={context.seed}")
        context.state["sample_start_time"] = time.perf_counter()
        context.state["steps_completed"] = 0
    except Exception as e:
        logger.error(f"Error in before_sample_callback: {e}")


def after_sample_callback(context: Optional[SamplingContext]) -> None:
    """
    Callback executed after a sampling run finishes.

    Stores ``last_sample_duration`` (seconds) in the context state.

    Args:
        context: The run's sampling context (may be None)
    """
    try:
        if context is None:
            return
        start = context.state.get("sample_start_time")
        if start is not None:
            duration = time.perf_counter() - start
            context.state["last_sample_duration"] = duration
            logger.info(
                f"Sampling completed: run={context.run_id}, seed={context.seed}, "
                f"{context.state.get('steps_completed', 0)} steps in {duration:.2f}s"
            )
    except Exception as e:
        logger.error(f"Error in after_sample_callback: {e}")
