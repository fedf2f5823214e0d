"""
Callback System Evaluations

Tests the sampling callbacks including:
- Run lifecycle timing
- Step timing and bounded step history
- Attention record collection
- Error handling and logging
"""

import logging
import os
import sys
import time

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.attention import AttentionRecord
from cacgen.callbacks import (
    AttentionStore,
    SamplingContext,
    after_sample_callback,
    after_step_callback,
    before_sample_callback,
    before_step_callback,
)
from cacgen.callbacks.step import STEP_HISTORY_LIMIT

logging.basicConfig(level=logging.INFO, format="%(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


class BrokenContext:
    """Context whose state cannot be written"""

    run_id = "broken"
    seed = 0
    state = None


def _record(step: int, layer: str = "down0") -> AttentionRecord:
    return AttentionRecord(layer=layer, layer_index=0, step=step, height=2, width=2, maps=np.zeros((1, 4, 3)))


def test_sample_callbacks():
    """Run lifecycle callbacks store a positive duration"""
    print("🔄 Testing Sampling Lifecycle Callbacks")
    context = SamplingContext(run_id="lifecycle", seed=7)

    assert before_sample_callback(context) is None, "before_sample_callback should return None"
    assert "sample_start_time" in context.state, "Should track sampling start time"
    time.sleep(0.01)
    assert after_sample_callback(context) is None, "after_sample_callback should return None"
    assert context.state["last_sample_duration"] > 0, "Duration should be positive"

    print("✅ PASS: Sampling callbacks executed successfully")


def test_step_callbacks():
    """Step callbacks count steps and bound the history"""
    print("⏱️  Testing Step Callbacks")
    context = SamplingContext(run_id="steps")
    before_sample_callback(context)
    for step in range(STEP_HISTORY_LIMIT + 10, 0, -1):
        before_step_callback(context, step, "md" if step > 30 else "cac")
        after_step_callback(context, step, "md" if step > 30 else "cac")

    history = context.state["step_history"]
    assert len(history) == STEP_HISTORY_LIMIT, f"history should hold {STEP_HISTORY_LIMIT} entries"
    assert history[-1]["step"] == 1 and history[-1]["phase"] == "cac", "latest step should be last"
    assert context.state["steps_completed"] == STEP_HISTORY_LIMIT + 10
    assert context.state["current_step"] == 1
    assert all(entry["duration"] >= 0 for entry in history), "durations should be non-negative"

    print("✅ PASS: Step callbacks tracked every step")


def test_attention_store():
    """Stride, record cap and None records"""
    print("🗂️  Testing Attention Store")
    store = AttentionStore(stride=2)
    for step in range(1, 7):
        store(_record(step))
    store(None)
    assert store.steps() == [2, 4, 6], f"unexpected steps {store.steps()}"

    capped = AttentionStore(max_records=2)
    for step in range(1, 5):
        capped(_record(step))
    assert [r.step for r in capped.records] == [3, 4], "cap should keep the most recent records"

    dropping = AttentionStore(max_records=0)
    dropping(_record(1))
    assert len(dropping) == 0, "max_records=0 keeps nothing"

    store.reset()
    assert len(store) == 0
    with pytest.raises(ValueError):
        AttentionStore(stride=0)

    print("✅ PASS: Attention store collects records as configured")


def test_callback_error_handling():
    """Callbacks never raise on missing or broken contexts"""
    print("🛡️  Testing Callback Error Handling")
    for context in (None, BrokenContext()):
        assert before_sample_callback(context) is None
        assert before_step_callback(context, 3, "cac") is None
        assert after_step_callback(context, 3, "cac") is None
        assert after_sample_callback(context) is None

    print("✅ PASS: Callbacks handle invalid contexts gracefully")


def run_callback_evaluations():
    """Run all callback evaluation tests"""
    print("🔬 Starting Callback System Evaluations")
    print("=" * 50)

    test_sample_callbacks()
    test_step_callbacks()
    test_attention_store()
    test_callback_error_handling()

    print("=" * 50)
    print("🎉 All callback system tests passed!")


if __name__ == "__main__":
    run_callback_evaluations()
