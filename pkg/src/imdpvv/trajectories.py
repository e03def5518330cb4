"""Executions as (true state, estimate) sequences, with JSON-lines storage.

File format: UTF-8 JSON-lines, one step per line,

    {"traj": 0, "t": 0, "s": [x, y], "shat": [u, v]}

with an optional single header line ``{"meta": {...}}`` as line 1.
State and estimate arities must be consistent across the file (the two
may differ from each other); time indices run 0, 1, ... within each
trajectory.  Values must be finite.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .grid import GridSpec


@dataclass(frozen=True)
class TrajectoryStep:
    time_index: int
    state: tuple[float, ...]
    estimate: tuple[float, ...]


@dataclass
class TrajectoryDataset:
    trajectories: list[list[TrajectoryStep]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def num_trajectories(self) -> int:
        return len(self.trajectories)

    @property
    def num_steps(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def validate(self):
        sdim = edim = None
        for i, traj in enumerate(self.trajectories):
            if not traj:
                raise DataError(f"trajectory {i} is empty")
            for k, step in enumerate(traj):
                if step.time_index != k:
                    raise DataError(
                        f"trajectory {i}: time index {step.time_index} at position {k}"
                    )
                if sdim is None:
                    sdim, edim = len(step.state), len(step.estimate)
                if len(step.state) != sdim or len(step.estimate) != edim:
                    raise DataError(f"trajectory {i} step {k}: inconsistent arity")
                if not all(np.isfinite(step.state)) or not all(np.isfinite(step.estimate)):
                    raise DataError(f"trajectory {i} step {k}: non-finite value")

    def state_dim(self) -> int:
        return len(self.trajectories[0][0].state)

    def estimate_dim(self) -> int:
        return len(self.trajectories[0][0].estimate)

    def step_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """All steps stacked: (states (N, ds), estimates (N, de))."""
        states = np.array(
            [s.state for t in self.trajectories for s in t], dtype=float
        )
        ests = np.array(
            [s.estimate for t in self.trajectories for s in t], dtype=float
        )
        return states, ests


def save_dataset(dataset: TrajectoryDataset, path) -> None:
    """Write JSON-lines; round-trips bit-exactly for finite values."""
    dataset.validate()
    with open(path, "w", encoding="utf-8") as fh:
        if dataset.metadata:
            fh.write(json.dumps({"meta": dataset.metadata}, sort_keys=True,
                                allow_nan=False) + "\n")
        for i, traj in enumerate(dataset.trajectories):
            for step in traj:
                rec = {
                    "traj": i,
                    "t": step.time_index,
                    "s": list(step.state),
                    "shat": list(step.estimate),
                }
                try:
                    fh.write(json.dumps(rec, allow_nan=False) + "\n")
                except ValueError as exc:
                    raise DataError(
                        f"trajectory {i} step {step.time_index}: {exc}"
                    ) from exc


def load_dataset(path) -> TrajectoryDataset:
    """Parse JSON-lines; malformed lines are reported with their number."""
    metadata: dict = {}
    trajs: dict[int, list[TrajectoryStep]] = {}
    sdim = edim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON ({exc.msg})")
            if lineno == 1 and "meta" in rec:
                metadata = rec["meta"]
                continue
            try:
                ti = int(rec["traj"])
                t = int(rec["t"])
                s = tuple(float(x) for x in rec["s"])
                shat = tuple(float(x) for x in rec["shat"])
            except (KeyError, TypeError, ValueError):
                raise DataError(f"{path}: line {lineno}: malformed step record")
            if not all(np.isfinite(s)) or not all(np.isfinite(shat)):
                raise DataError(f"{path}: line {lineno}: non-finite value")
            if sdim is None:
                sdim, edim = len(s), len(shat)
            if len(s) != sdim:
                raise DataError(
                    f"{path}: line {lineno}: state arity {len(s)} != {sdim}"
                )
            if len(shat) != edim:
                raise DataError(
                    f"{path}: line {lineno}: estimate arity {len(shat)} != {edim}"
                )
            trajs.setdefault(ti, []).append(TrajectoryStep(t, s, shat))
    ordered = [trajs[k] for k in sorted(trajs)]
    ds = TrajectoryDataset(ordered, metadata)
    ds.validate()
    return ds


@dataclass
class BinnedData:
    """Per-state multisets of abstracted estimates, kept as count vectors."""

    state_grid: GridSpec
    estimate_grid: GridSpec
    counts: dict[int, np.ndarray]  # state flat index -> (num estimate bins,) int64
    clamped_states: int
    clamped_estimates: int

    @property
    def total(self) -> int:
        return int(sum(int(c.sum()) for c in self.counts.values()))

    def counts_by_tile(self, state_tile) -> dict[tuple, int]:
        """Observed estimate tiles and multiplicities at one state tile."""
        flat = self.state_grid.flat_index(state_tile)
        vec = self.counts.get(flat)
        if vec is None:
            return {}
        out = {}
        for b in np.nonzero(vec)[0]:
            out[self.estimate_grid.tile_from_flat(int(b))] = int(vec[b])
        return out


def bin_dataset(
    dataset: TrajectoryDataset, state_grid: GridSpec, estimate_grid: GridSpec
) -> BinnedData:
    """Abstract every step and tally estimate-bin occurrences per state tile.

    Multiplicity is preserved: the result is a multiset, one count per
    observed sample, so the totals match the dataset's step count.
    """
    if dataset.num_trajectories == 0:
        raise DataError("cannot bin an empty dataset")
    dataset.validate()
    states, ests = dataset.step_arrays()
    sidx, sclamp = state_grid.abstract_points(states)
    eidx, eclamp = estimate_grid.abstract_points(ests)
    sflat = state_grid.flat_indices(sidx)
    eflat = estimate_grid.flat_indices(eidx)
    B = estimate_grid.num_tiles
    counts: dict[int, np.ndarray] = {}
    order = np.argsort(sflat, kind="stable")
    sflat_sorted = sflat[order]
    eflat_sorted = eflat[order]
    boundaries = np.flatnonzero(np.diff(sflat_sorted)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(sflat_sorted)]))
    for a, b in zip(starts, ends):
        vec = np.bincount(eflat_sorted[a:b], minlength=B).astype(np.int64)
        counts[int(sflat_sorted[a])] = vec
    return BinnedData(state_grid, estimate_grid, counts, sclamp, eclamp)


def abstract_transitions(
    dataset: TrajectoryDataset, state_grid: GridSpec, estimate_grid: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Abstract consecutive pairs: (state flat, estimate flat, next state flat).

    One row per within-trajectory transition; trajectories of length one
    contribute nothing.
    """
    dataset.validate()
    s_list, e_list, n_list = [], [], []
    for traj in dataset.trajectories:
        if len(traj) < 2:
            continue
        states = np.array([s.state for s in traj], dtype=float)
        ests = np.array([s.estimate for s in traj], dtype=float)
        sidx, _ = state_grid.abstract_points(states)
        eidx, _ = estimate_grid.abstract_points(ests)
        sflat = state_grid.flat_indices(sidx)
        eflat = estimate_grid.flat_indices(eidx)
        s_list.append(sflat[:-1])
        e_list.append(eflat[:-1])
        n_list.append(sflat[1:])
    if not s_list:
        empty = np.array([], dtype=np.int64)
        return empty, empty, empty
    return (
        np.concatenate(s_list),
        np.concatenate(e_list),
        np.concatenate(n_list),
    )
