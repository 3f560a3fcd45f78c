"""Dataset ingestion, synthetic generation, and trace/metrics files."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .engine import TraceRecord

TRACE_HEADER = "iteration,wall_time_ms,log_likelihood,n_clusters,move_type,accepted"


@dataclass
class Dataset:
    points: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("points must form a nonempty (n, d) array")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.points.shape[0],):
                raise ValueError("labels must have one entry per point")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixture of k spherical-ish Gaussians with random means and variances."""

    k: int = 10
    n: int = 100
    dim: int = 25
    seed: int = 0
    mean_spread: float = 10.0
    var_range: tuple = (0.5, 1.5)

    def __post_init__(self):
        if self.k < 1 or self.n < self.k or self.dim < 1:
            raise ValueError("need k >= 1, n >= k, dim >= 1")
        lo, hi = self.var_range
        if not 0 < lo <= hi:
            raise ValueError("var_range must be positive and ordered")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw component means and variances, then an even split of points.

    Means are uniform in [-mean_spread, mean_spread] per dimension and
    per-dimension variances uniform in var_range. Point counts divide n
    evenly with the remainder going to the earliest components. Ground
    truth labels are attached. Deterministic in the seed.
    """
    rng = np.random.default_rng(spec.seed)
    means = rng.uniform(-spec.mean_spread, spec.mean_spread, (spec.k, spec.dim))
    stds = np.sqrt(rng.uniform(spec.var_range[0], spec.var_range[1], (spec.k, spec.dim)))
    base, rem = divmod(spec.n, spec.k)
    counts = [base + (1 if i < rem else 0) for i in range(spec.k)]
    blocks = []
    labels = []
    for i, count in enumerate(counts):
        blocks.append(means[i] + stds[i] * rng.standard_normal((count, spec.dim)))
        labels.extend([i] * count)
    return Dataset(np.vstack(blocks), np.array(labels))


def load_csv(path, labels: bool = False) -> Dataset:
    """Read one point per row; an optional final integer label column."""
    rows = []
    label_col = []
    width = None
    with open(path, newline="") as fh:
        for row_idx, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
                if labels and width < 2:
                    raise ValueError("label column requested but rows have one field")
            elif len(row) != width:
                raise ValueError(
                    f"row {row_idx}: expected {width} fields, found {len(row)}"
                )
            values = row[:-1] if labels else row
            parsed = []
            for col_idx, cell in enumerate(values, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"row {row_idx}, column {col_idx}: non-numeric cell {cell!r}"
                    ) from None
            rows.append(parsed)
            if labels:
                try:
                    label_col.append(int(row[-1]))
                except ValueError:
                    raise ValueError(
                        f"row {row_idx}: non-integer label {row[-1]!r}"
                    ) from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(label_col) if labels else None)


def write_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        for i in range(dataset.n):
            cells = [repr(float(x)) for x in dataset.points[i]]
            if dataset.labels is not None:
                cells.append(str(int(dataset.labels[i])))
            fh.write(",".join(cells) + "\n")


def write_trace(trace, path) -> None:
    """Trace CSV with a fixed header; floats keep full precision."""
    with open(path, "w", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in trace:
            fh.write(
                f"{r.iteration},{r.wall_time_ms!r},{r.log_likelihood!r},"
                f"{r.n_clusters},{r.move_type},{int(r.accepted)}\n"
            )


def read_trace(path) -> list:
    records = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        for line in fh:
            it, wt, ll, m, move, acc = line.strip().split(",")
            records.append(
                TraceRecord(int(it), float(wt), float(ll), int(m), move, bool(int(acc)), 0.0)
            )
    return records


def write_metrics(metrics: dict, path) -> None:
    with open(path, "w") as fh:
        for key, value in metrics.items():
            fh.write(f"{key}={value!r}\n" if isinstance(value, float) else f"{key}={value}\n")


def write_assignments(labels, path) -> None:
    with open(path, "w") as fh:
        for lab in labels:
            fh.write(f"{int(lab)}\n")


def read_assignments(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([int(line.strip()) for line in fh if line.strip()])
