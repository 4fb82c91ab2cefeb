"""Running performance metrics: mean landing point, distance error, scatter."""

from __future__ import annotations

import numpy as np


def running_metrics(points, target) -> tuple[np.ndarray, float, float]:
    """Mean landing point, distance of the mean to the target, and the
    population standard deviation of the landing points (1/i weighting)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    target = np.asarray(target, dtype=float)
    r_bar = pts.mean(axis=0)
    eps = float(np.linalg.norm(target - r_bar))
    sigma = float(np.sqrt(np.mean(np.sum((pts - r_bar) ** 2, axis=1))))
    return r_bar, eps, sigma


class MetricsState:
    """Accumulates landing points and recomputes the metrics exactly."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)
        self.points: list[np.ndarray] = []

    def update(self, r_landing) -> tuple[np.ndarray, float, float]:
        self.points.append(np.asarray(r_landing, dtype=float))
        return self.current()

    def current(self) -> tuple[np.ndarray, float, float]:
        return running_metrics(self.points, self.target)

    @property
    def count(self) -> int:
        return len(self.points)
