"""Tests for per-trial random streams."""

from __future__ import annotations

import numpy as np

from shared.types import trial_rng


class TestTrialRng:
    def test_reproducible(self) -> None:
        assert np.array_equal(trial_rng(3, 17).random(5), trial_rng(3, 17).random(5))

    def test_trials_are_distinct(self) -> None:
        assert not np.array_equal(trial_rng(3, 0).random(5), trial_rng(3, 1).random(5))

    def test_seeds_are_distinct(self) -> None:
        assert not np.array_equal(trial_rng(3, 0).random(5), trial_rng(4, 0).random(5))

    def test_order_independent(self) -> None:
        forward = [trial_rng(9, t).random() for t in range(5)]
        backward = [trial_rng(9, t).random() for t in reversed(range(5))]
        assert forward == backward[::-1]
