"""Censored survival samples with bounded covariates.

A dataset holds, per subject, the observed time (event or censoring,
whichever came first) on the unit interval, an event indicator, and a
covariate path that is either constant in time or a right-continuous step
function.  Datasets are immutable after construction and safe to share
across threads.

Event times are required to be distinct.  Files with tied event times are
accepted: later rows are deterministically perturbed by a fraction of the
smallest positive gap between distinct observed times, and every
perturbation is recorded on the dataset.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import DataIngestionError

__all__ = [
    "CovariatePath",
    "Subject",
    "SurvivalDataset",
    "IngestOptions",
    "TieAdjustment",
    "CountingState",
    "load_csv",
    "save_csv",
    "counting_process",
    "event_times",
]


@dataclass(frozen=True)
class CovariatePath:
    """Piecewise-constant covariate trajectory on [0, 1].

    ``kind`` is ``"constant"`` (no breakpoints, a single value vector) or
    ``"step"`` (right-continuous: the value on ``[b_j, b_{j+1})`` is
    ``values[j+1]``, with ``values[0]`` holding on ``[0, b_1)``).
    """

    kind: str
    breakpoints: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "step"):
            raise ValueError(f"unknown covariate path kind {self.kind!r}")
        if self.kind == "constant":
            if self.breakpoints or len(self.values) != 1:
                raise ValueError("constant path takes no breakpoints and one value vector")
        else:
            if len(self.values) != len(self.breakpoints) + 1:
                raise ValueError("step path needs one value vector per segment")
            for a, b in zip(self.breakpoints, self.breakpoints[1:]):
                if not a < b:
                    raise ValueError("breakpoints must be strictly ascending")
            if self.breakpoints and not (0.0 < self.breakpoints[0] and self.breakpoints[-1] < 1.0):
                raise ValueError("breakpoints must lie strictly inside (0, 1)")
        dims = {len(v) for v in self.values}
        if len(dims) != 1:
            raise ValueError("all segment vectors must share one dimension")

    @classmethod
    def constant(cls, values: Sequence[float]) -> "CovariatePath":
        return cls("constant", (), (tuple(float(v) for v in values),))

    @classmethod
    def step(
        cls, breakpoints: Sequence[float], values: Sequence[Sequence[float]]
    ) -> "CovariatePath":
        return cls(
            "step",
            tuple(float(b) for b in breakpoints),
            tuple(tuple(float(v) for v in row) for row in values),
        )

    @property
    def dim(self) -> int:
        return len(self.values[0])

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def value_at(self, t: float) -> tuple[float, ...]:
        """Covariate vector at time ``t`` (segment containing ``t``, left-closed)."""
        if self.kind == "constant":
            return self.values[0]
        return self.values[bisect_right(self.breakpoints, t)]

    def max_abs(self) -> float:
        return max((abs(v) for row in self.values for v in row), default=0.0)


@dataclass(frozen=True)
class Subject:
    """One observed individual: time on (0, 1], event flag, covariate path."""

    observed_time: float
    event: bool
    covariates: CovariatePath

    def __post_init__(self) -> None:
        if not (0.0 < self.observed_time <= 1.0):
            raise ValueError(
                f"observed_time must lie in (0, 1], got {self.observed_time!r}"
            )


class TieAdjustment(NamedTuple):
    """Record of one deterministic tie perturbation."""

    subject: int
    original: float
    adjusted: float


class CountingState(NamedTuple):
    """Counting-process view of one subject at one time."""

    N: int
    Y: int


@dataclass(frozen=True)
class IngestOptions:
    """Options controlling CSV ingestion."""

    normalize_time: bool = False
    covariate_bound: Optional[float] = None


def _resolve_event_ties(
    times: np.ndarray, events: np.ndarray
) -> tuple[np.ndarray, list[TieAdjustment]]:
    """Perturb tied event times so that each event occurs at a distinct instant.

    Within a tied group (row order) the first time is kept; the k-th later
    row is shifted by gap/2^k, where gap is the smallest positive spacing
    between distinct observed times.  Shifts flip downward when an upward
    shift would leave (0, 1].
    """
    ev_idx = np.flatnonzero(events)
    if ev_idx.size < 2:
        return times, []
    ev_times = times[ev_idx]
    uniq, counts = np.unique(ev_times, return_counts=True)
    if not np.any(counts > 1):
        return times, []

    distinct = np.unique(times)
    if distinct.size > 1:
        gap = float(np.min(np.diff(distinct)))
    else:
        t = float(distinct[0])
        gap = min(t, 1.0 - t) if t < 1.0 else t / 2.0

    out = times.copy()
    adjustments: list[TieAdjustment] = []
    for t in uniq[counts > 1]:
        group = ev_idx[ev_times == t]  # ascending row order
        for rank, subj in enumerate(group[1:], start=1):
            delta = gap / (2.0**rank)
            adjusted = t + delta
            if adjusted > 1.0:
                adjusted = t - delta
            out[subj] = adjusted
            adjustments.append(TieAdjustment(int(subj), float(t), float(adjusted)))
    return out, adjustments


class SurvivalDataset:
    """Immutable sample of censored survival observations.

    Parameters
    ----------
    subjects : sequence of Subject
        Observations with a common covariate dimension.
    covariate_bound : float, optional
        Declared uniform bound on absolute covariate values.  Defaults to
        the maximum absolute value present in the data.
    time_scale : float
        Factor mapping stored times back to the original axis (1.0 unless
        the loader normalized times into (0, 1]).
    """

    def __init__(
        self,
        subjects: Sequence[Subject],
        covariate_bound: Optional[float] = None,
        time_scale: float = 1.0,
    ) -> None:
        if len(subjects) == 0:
            raise DataIngestionError("empty dataset: need at least one subject")
        dims = {s.covariates.dim for s in subjects}
        if len(dims) != 1:
            raise DataIngestionError("subjects disagree on covariate dimension")
        p = dims.pop()
        if p < 1:
            raise DataIngestionError("covariate dimension must be at least 1")

        times = np.array([s.observed_time for s in subjects], dtype=float)
        events = np.array([s.event for s in subjects], dtype=bool)
        times, adjustments = _resolve_event_ties(times, events)

        max_abs = max(s.covariates.max_abs() for s in subjects)
        if covariate_bound is None:
            covariate_bound = max_abs if max_abs > 0.0 else 1.0
        elif max_abs > covariate_bound:
            raise DataIngestionError(
                f"covariate magnitude {max_abs} exceeds declared bound {covariate_bound}"
            )

        self._times = times
        self._events = events
        self._n = len(subjects)
        self._p = p
        self._covariate_bound = float(covariate_bound)
        self._time_scale = float(time_scale)
        self._tie_adjustments = tuple(adjustments)

        self._all_constant = all(s.covariates.is_constant for s in subjects)
        if self._all_constant:
            Z = np.array([s.covariates.values[0] for s in subjects], dtype=float)
            Z.setflags(write=False)
            self._Z = Z
            self._paths: Optional[tuple[CovariatePath, ...]] = None
        else:
            self._Z = None
            self._paths = tuple(s.covariates for s in subjects)

        order = np.argsort(times, kind="stable")
        ev_order = order[events[order]]
        self._event_order = ev_order  # subject indices, ascending event time
        self._event_time_values = times[ev_order]
        for arr in (self._times, self._events, self._event_order, self._event_time_values):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(
        cls,
        times: np.ndarray,
        events: np.ndarray,
        covariates: np.ndarray,
        covariate_bound: Optional[float] = None,
        time_scale: float = 1.0,
    ) -> "SurvivalDataset":
        """Build a dataset with constant covariates from plain arrays."""
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        Z = np.atleast_2d(np.asarray(covariates, dtype=float))
        if Z.shape[0] != times.shape[0] or events.shape[0] != times.shape[0]:
            raise DataIngestionError("times, events and covariates disagree on length")
        subjects = [
            Subject(float(t), bool(d), CovariatePath.constant(z))
            for t, d, z in zip(times, events, Z)
        ]
        return cls(subjects, covariate_bound=covariate_bound, time_scale=time_scale)

    # -- basic shape -------------------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    @property
    def p(self) -> int:
        return self._p

    @property
    def covariate_bound(self) -> float:
        return self._covariate_bound

    @property
    def time_scale(self) -> float:
        return self._time_scale

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def events(self) -> np.ndarray:
        return self._events

    @property
    def ties_adjusted(self) -> bool:
        return len(self._tie_adjustments) > 0

    @property
    def tie_adjustments(self) -> tuple[TieAdjustment, ...]:
        return self._tie_adjustments

    @property
    def n_events(self) -> int:
        return int(self._events.sum())

    @property
    def all_constant(self) -> bool:
        return self._all_constant

    @property
    def constant_covariates(self) -> np.ndarray:
        """The (n, p) covariate matrix; only defined when all paths are constant."""
        if self._Z is None:
            raise ValueError("dataset contains step covariate paths")
        return self._Z

    def subject(self, i: int) -> Subject:
        if not (0 <= i < self._n):
            raise IndexError(f"subject index {i} out of range [0, {self._n})")
        if self._paths is not None:
            path = self._paths[i]
        else:
            path = CovariatePath.constant(self._Z[i])
        return Subject(float(self._times[i]), bool(self._events[i]), path)

    @property
    def subjects(self) -> tuple[Subject, ...]:
        return tuple(self.subject(i) for i in range(self._n))

    def covariates_at(self, t: float) -> np.ndarray:
        """Covariate matrix (n, p) with rows Z_i(t)."""
        if self._Z is not None:
            return self._Z
        return np.array([p.value_at(t) for p in self._paths], dtype=float)

    def path(self, i: int) -> CovariatePath:
        if self._paths is not None:
            return self._paths[i]
        return CovariatePath.constant(self._Z[i])


def counting_process(ds: SurvivalDataset, i: int, t: float) -> CountingState:
    """Counting-process pair (N, Y) of subject ``i`` at time ``t``.

    Y = 1 iff the subject is still at risk (X_i >= t); N = 1 iff the
    subject's event has occurred by ``t`` (X_i <= t and the event flag is
    set).  Indices are 0-based.
    """
    if not (0 <= i < ds.n):
        raise IndexError(f"subject index {i} out of range [0, {ds.n})")
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"time {t} outside [0, 1]")
    x = ds.times[i]
    y = 1 if x >= t else 0
    n = 1 if (ds.events[i] and x <= t) else 0
    return CountingState(N=n, Y=y)


def event_times(ds: SurvivalDataset) -> list[tuple[float, int]]:
    """Strictly ascending (time, subject index) pairs of observed events.

    This is the support of the aggregate counting measure and the
    integration grid for every event-time sum in the package.
    """
    return [
        (float(t), int(i))
        for t, i in zip(ds._event_time_values, ds._event_order)
    ]


_FLOAT_NAN_TOKENS = {"", "nan", "na", "null", "none"}


def _parse_cell(raw: str, row: int, col: str) -> float:
    token = raw.strip()
    if token.lower() in _FLOAT_NAN_TOKENS:
        raise DataIngestionError(f"missing value at row {row}, column {col!r}")
    try:
        value = float(token)
    except ValueError as exc:
        raise DataIngestionError(
            f"non-numeric value {raw!r} at row {row}, column {col!r}"
        ) from exc
    if math.isnan(value):
        raise DataIngestionError(f"missing value at row {row}, column {col!r}")
    if math.isinf(value):
        raise DataIngestionError(f"non-finite value at row {row}, column {col!r}")
    return value


def load_csv(path: str, options: IngestOptions = IngestOptions()) -> SurvivalDataset:
    """Read a survival dataset from CSV.

    Expected header: ``time,status,z1,...,zp`` with status in {0, 1}.
    Lines starting with ``#`` are ignored.  Times must lie in (0, 1]
    unless ``options.normalize_time`` is set, in which case every time is
    divided by the largest observed time and the scale factor is recorded
    on the dataset.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataIngestionError(f"cannot open {path}: {exc}") from exc

    with fh:
        rows = [
            row
            for row in csv.reader(fh)
            if row and not row[0].lstrip().startswith("#")
        ]

    if not rows:
        raise DataIngestionError(f"{path}: no header row found")
    header = [h.strip().lower() for h in rows[0]]
    expected = ["time", "status"] + [f"z{j}" for j in range(1, len(header) - 1)]
    if len(header) < 3 or header != expected:
        raise DataIngestionError(
            f"{path}: header must be time,status,z1,...,zp (got {','.join(header)})"
        )
    p = len(header) - 2
    body = rows[1:]
    if not body:
        raise DataIngestionError(f"{path}: no data rows")

    times = np.empty(len(body))
    events = np.empty(len(body), dtype=bool)
    Z = np.empty((len(body), p))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DataIngestionError(
                f"{path}: row {r + 1} has {len(row)} fields, expected {len(header)}"
            )
        times[r] = _parse_cell(row[0], r + 1, "time")
        status = _parse_cell(row[1], r + 1, "status")
        if status not in (0.0, 1.0):
            raise DataIngestionError(
                f"{path}: status must be 0 or 1 at row {r + 1}, got {row[1]!r}"
            )
        events[r] = bool(status)
        for j in range(p):
            Z[r, j] = _parse_cell(row[2 + j], r + 1, f"z{j + 1}")

    if np.any(times <= 0.0):
        bad = int(np.flatnonzero(times <= 0.0)[0])
        raise DataIngestionError(f"{path}: non-positive time at row {bad + 1}")
    scale = 1.0
    if np.any(times > 1.0):
        if not options.normalize_time:
            bad = int(np.flatnonzero(times > 1.0)[0])
            raise DataIngestionError(
                f"{path}: time exceeds 1 at row {bad + 1}; pass normalize_time to rescale"
            )
        scale = float(times.max())
        times = times / scale

    return SurvivalDataset.from_arrays(
        times, events, Z, covariate_bound=options.covariate_bound, time_scale=scale
    )


def save_csv(ds: SurvivalDataset, path: str) -> None:
    """Write a constant-covariate dataset back to CSV on its original time axis.

    Uses shortest round-trip float formatting, so load followed by save
    reproduces the input bytes whenever no normalization or tie policy
    fired during loading.
    """
    Z = ds.constant_covariates
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "status"] + [f"z{j + 1}" for j in range(ds.p)])
        for i in range(ds.n):
            writer.writerow(
                [repr(float(ds.times[i] * ds.time_scale)), int(ds.events[i])]
                + [repr(float(v)) for v in Z[i]]
            )
