"""
Seeded sample points, probe vectors and ordered parallel evaluation.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Tuple

from joblib import Parallel, delayed
import numpy as np

from configs.config import PARALLEL, SAMPLING, TOLERANCE
from .errors import SamplingError, WarpCheckError
from .expr import Point
from .logger import logger


@dataclass(frozen=True)
class SamplePlan:
    """Where, how many and how strictly to sample."""
    box: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    count: int = SAMPLING['count']
    seed: int = SAMPLING['seed']
    tol: float = TOLERANCE['default']

    def __post_init__(self):
        for name, (lo, hi) in self.box.items():
            if not lo < hi:
                raise SamplingError(f"empty sampling interval for {name}: [{lo}, {hi}]")
        if self.count < 1:
            raise SamplingError(f"sample count must be at least 1, got {self.count}")
        if not self.tol > 0:
            raise SamplingError(f"tolerance must be positive, got {self.tol}")

    def interval(self, name):
        return tuple(self.box.get(name, SAMPLING['default_box']))

    def with_overrides(self, count=None, seed=None, tol=None, box=None):
        merged = dict(self.box)
        if box:
            merged.update(box)
        return replace(
            self,
            box=merged,
            count=self.count if count is None else int(count),
            seed=self.seed if seed is None else int(seed),
            tol=self.tol if tol is None else float(tol),
        )

    def bound(self, scale):
        """Absolute plus relative tolerance against ``scale``."""
        return self.tol * (1.0 + abs(scale))


def draw_points(chart_name, coords, plan, accept=None):
    """
    Draw ``plan.count`` points uniformly from the plan's box.

    Points rejected by ``accept`` (or raising an engine error inside it) are
    redrawn, at most ``SAMPLING['max_redraws']`` times per point.

    Args:
        chart_name (str): Chart the points belong to
        coords (Sequence[str]): Coordinate names in chart order
        plan (SamplePlan): Box, count and seed
        accept (callable, optional): Predicate on a candidate Point

    Returns:
        list[Point]: Points in draw order
    """
    rng = np.random.default_rng(plan.seed)
    bounds = np.array([plan.interval(name) for name in coords], dtype=float).reshape(len(coords), 2)
    points = []
    redraws = 0
    for index in range(plan.count):
        for attempt in range(SAMPLING['max_redraws'] + 1):
            values = rng.uniform(bounds[:, 0], bounds[:, 1])
            point = Point(chart_name, {name: float(v) for name, v in zip(coords, values)})
            if accept is None:
                break
            try:
                if accept(point):
                    break
            except WarpCheckError as e:
                logger.debug(f"Rejected sample {point.as_dict()}: {e}")
            redraws += 1
        else:
            raise SamplingError(
                f"no admissible sample on {chart_name} after {SAMPLING['max_redraws']} redraws (sample {index})"
            )
        points.append(point)
    if redraws:
        logger.debug(f"{chart_name}: {redraws} redraws for {plan.count} samples")
    return points


def probe_vectors(dim, seed, count=None):
    """
    Coordinate frame followed by ``count`` seeded random unit vectors.

    Returns:
        np.ndarray: Array of shape (dim + count, dim)
    """
    count = SAMPLING['random_probes'] if count is None else count
    rng = np.random.default_rng([int(seed), int(dim), 1])
    random = rng.normal(size=(count, dim))
    random /= np.linalg.norm(random, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), random])


def map_samples(func, points, n_jobs: Optional[int] = None):
    """Evaluate ``func`` on every point; results keep the order of ``points``."""
    n_jobs = PARALLEL['n_jobs'] if n_jobs is None else n_jobs
    if n_jobs == 1:
        return [func(p) for p in points]
    return Parallel(n_jobs=n_jobs, prefer=PARALLEL['prefer'])(delayed(func)(p) for p in points)


def spread(values):
    """Max minus min of a sequence, 0 for fewer than two values."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.max() - values.min())


def merge_boxes(*boxes: Dict[str, Tuple[float, float]]):
    merged = {}
    for box in boxes:
        if box:
            merged.update({name: tuple(map(float, interval)) for name, interval in box.items()})
    return merged
