"""Interval transition bounds from binned data via exact binomial intervals.

For each observed state tile, every estimate bin receives a two-sided
Clopper-Pearson interval at level ``alpha / (2 * num_bins)`` per side,
where ``num_bins`` is the total number of estimate bins; the union bound
over bins gives simultaneous coverage at level ``alpha`` for the whole
per-state distribution.  Trials are the number of samples observed at
the state tile; bins never observed there get the zero-success interval.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DataError
from .grid import GridSpec
from .special import beta_ppf
from .trajectories import BinnedData, TrajectoryDataset, bin_dataset

log = logging.getLogger(__name__)

DEFAULT_MIN_SAMPLES = 10


@dataclass(frozen=True)
class ProbabilityInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise DataError(f"invalid probability interval [{self.lo}, {self.hi}]")

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi

    def width(self) -> float:
        return self.hi - self.lo


@lru_cache(maxsize=100_000)
def _cp_cached(successes: int, trials: int, alpha: float, num_bins: int):
    level = alpha / (2.0 * num_bins)
    if successes == 0:
        lo = 0.0
    else:
        lo = beta_ppf(level, successes, trials - successes + 1)
    if successes == trials:
        hi = 1.0
    else:
        hi = beta_ppf(1.0 - level, successes + 1, trials - successes)
    return lo, hi


def clopper_pearson(
    successes: int, trials: int, alpha: float, num_bins: int = 1
) -> ProbabilityInterval:
    """Exact binomial confidence interval from Beta quantiles.

    ``num_bins`` spreads the error budget across simultaneous intervals:
    each side uses level ``alpha / (2 * num_bins)``.  The boundary
    conventions are lo = 0 at zero successes and hi = 1 at full success.
    """
    if not isinstance(successes, (int, np.integer)) or successes < 0:
        raise DataError("successes must be a nonnegative integer")
    if not isinstance(trials, (int, np.integer)) or trials <= 0:
        raise DataError("trials must be a positive integer")
    if successes > trials:
        raise DataError("successes cannot exceed trials")
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must lie strictly between 0 and 1")
    if num_bins < 1:
        raise DataError("num_bins must be at least 1")
    lo, hi = _cp_cached(int(successes), int(trials), float(alpha), int(num_bins))
    return ProbabilityInterval(lo, hi)


@dataclass
class StateIntervals:
    """Per-state interval row: explicit bins plus a default for the rest."""

    trials: int
    explicit: dict[int, ProbabilityInterval]
    default: ProbabilityInterval

    def interval(self, est_flat: int) -> ProbabilityInterval:
        return self.explicit.get(est_flat, self.default)

    def bounds(self, num_bins: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(num_bins, self.default.lo)
        hi = np.full(num_bins, self.default.hi)
        for b, iv in self.explicit.items():
            lo[b] = iv.lo
            hi[b] = iv.hi
        return lo, hi


@dataclass
class IntervalTransitionFunction:
    state_grid: GridSpec
    estimate_grid: GridSpec
    alpha: float
    num_estimate_bins: int
    states: dict[int, StateIntervals] = field(default_factory=dict)
    repair_count: int = 0
    low_sample_states: list[int] = field(default_factory=list)

    def has_state(self, state_flat: int) -> bool:
        return state_flat in self.states

    def interval(self, state_tile, est_tile) -> ProbabilityInterval:
        sf = self.state_grid.flat_index(state_tile)
        if sf not in self.states:
            raise DataError(f"no interval data at state tile {tuple(state_tile)}")
        return self.states[sf].interval(self.estimate_grid.flat_index(est_tile))

    def bounds_matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense (S, B) lower/upper bounds plus a has-data mask over states."""
        S = self.state_grid.num_tiles
        B = self.num_estimate_bins
        lo = np.zeros((S, B))
        hi = np.zeros((S, B))
        has = np.zeros(S, dtype=bool)
        for sf, row in self.states.items():
            lo[sf], hi[sf] = row.bounds(B)
            has[sf] = True
        return lo, hi, has


def _repair_state(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Restore sum(lo) <= 1 <= sum(hi); returns possibly-adjusted copies."""
    repaired = False
    slo = lo.sum()
    if slo > 1.0 + 1e-12:
        lo = lo / slo
        repaired = True
    shi = hi.sum()
    guard = 0
    while shi < 1.0 - 1e-12 and guard < 64:
        open_mask = hi < 1.0
        if not open_mask.any():
            break
        hi = np.minimum(hi / shi, 1.0)
        hi = np.maximum(hi, lo)
        shi = hi.sum()
        repaired = True
        guard += 1
    return lo, hi, repaired


def intervals_from_counts(
    binned: BinnedData,
    alpha: float,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> IntervalTransitionFunction:
    """Interval rows for every state tile with data in ``binned``."""
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must lie strictly between 0 and 1")
    B = binned.estimate_grid.num_tiles
    out = IntervalTransitionFunction(
        state_grid=binned.state_grid,
        estimate_grid=binned.estimate_grid,
        alpha=alpha,
        num_estimate_bins=B,
    )
    for sf in sorted(binned.counts):
        vec = binned.counts[sf]
        trials = int(vec.sum())
        if trials == 0:
            continue
        if trials < min_samples:
            out.low_sample_states.append(sf)
        default = clopper_pearson(0, trials, alpha, B)
        observed = np.nonzero(vec)[0]
        lo = np.full(B, default.lo)
        hi = np.full(B, default.hi)
        for b in observed:
            iv = clopper_pearson(int(vec[b]), trials, alpha, B)
            lo[b] = iv.lo
            hi[b] = iv.hi
        lo, hi, repaired = _repair_state(lo, hi)
        if repaired:
            out.repair_count += 1
        explicit = {
            int(b): ProbabilityInterval(float(lo[b]), float(hi[b])) for b in observed
        }
        # After repair the unobserved bins may differ from the raw default.
        rest = np.setdiff1d(np.arange(B), observed)
        if rest.size:
            default = ProbabilityInterval(float(lo[rest[0]]), float(hi[rest[0]]))
        out.states[sf] = StateIntervals(trials, explicit, default)
    if out.low_sample_states:
        log.warning(
            "%d state tiles have fewer than %d samples",
            len(out.low_sample_states),
            min_samples,
        )
    return out


def conf_int(
    dataset: TrajectoryDataset,
    state_grid: GridSpec,
    estimate_grid: GridSpec,
    alpha: float,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> IntervalTransitionFunction:
    """Bin the dataset and derive the full interval transition function."""
    if dataset.num_trajectories == 0:
        raise DataError("cannot build intervals from an empty dataset")
    binned = bin_dataset(dataset, state_grid, estimate_grid)
    return intervals_from_counts(binned, alpha, min_samples=min_samples)


def _grid_triples(grid: GridSpec):
    return [
        [lo, hi, w]
        for lo, hi, w in zip(grid.lower_bounds, grid.upper_bounds, grid.tile_widths)
    ]


def save_delta(delta: IntervalTransitionFunction, path) -> None:
    """JSON-lines: a header, then per state one default line and one line
    per explicitly bounded estimate bin."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "interval-transition-function",
            "alpha": delta.alpha,
            "num_estimate_bins": delta.num_estimate_bins,
            "state_grid": _grid_triples(delta.state_grid),
            "estimate_grid": _grid_triples(delta.estimate_grid),
            "repair_count": delta.repair_count,
            "low_sample_states": sorted(delta.low_sample_states),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for sf in sorted(delta.states):
            row = delta.states[sf]
            s = list(delta.state_grid.tile_from_flat(sf))
            fh.write(
                json.dumps(
                    {
                        "s": s,
                        "trials": row.trials,
                        "rest_lo": row.default.lo,
                        "rest_hi": row.default.hi,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            for b in sorted(row.explicit):
                iv = row.explicit[b]
                e = list(delta.estimate_grid.tile_from_flat(b))
                fh.write(
                    json.dumps(
                        {"s": s, "e": e, "lo": iv.lo, "hi": iv.hi}, sort_keys=True
                    )
                    + "\n"
                )


def load_delta(path) -> IntervalTransitionFunction:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "interval-transition-function":
            raise DataError(f"{path}: not an interval transition file")
        state_grid = GridSpec.from_triples(header["state_grid"])
        estimate_grid = GridSpec.from_triples(header["estimate_grid"])
        delta = IntervalTransitionFunction(
            state_grid=state_grid,
            estimate_grid=estimate_grid,
            alpha=header["alpha"],
            num_estimate_bins=header["num_estimate_bins"],
            repair_count=header.get("repair_count", 0),
            low_sample_states=list(header.get("low_sample_states", [])),
        )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            sf = state_grid.flat_index(rec["s"])
            if "trials" in rec:
                delta.states[sf] = StateIntervals(
                    trials=int(rec["trials"]),
                    explicit={},
                    default=ProbabilityInterval(rec["rest_lo"], rec["rest_hi"]),
                )
            else:
                if sf not in delta.states:
                    raise DataError(f"{path}: line {lineno}: bin before state header")
                bf = estimate_grid.flat_index(rec["e"])
                delta.states[sf].explicit[bf] = ProbabilityInterval(
                    rec["lo"], rec["hi"]
                )
    return delta
