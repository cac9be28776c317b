"""Self-describing run records: JSONL persistence and table aggregation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

SCHEMA = "moment-forge/run-v1"
VOLATILE_FIELDS = ("timestamp", "wall_time_s")  # excluded from determinism comparisons


def theta_digest(theta: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(theta, dtype=np.float64).tobytes()).hexdigest()


@dataclass
class RunRecord:
    design: str
    estimator: str
    n_train: int
    seed: int
    test_mse: float
    theta_digest: str
    theta: list | None = None  # omitted for large parameter vectors
    val_metric: float | None = None
    hyperparams: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    timestamp: str = ""
    version: str = ""
    schema: str = SCHEMA

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "RunRecord":
        obj = json.loads(line)
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown record fields: {sorted(extra)}")
        return cls(**obj)

    def canonical_payload(self) -> str:
        """Record serialization with volatile (timing) fields removed."""
        obj = asdict(self)
        for k in VOLATILE_FIELDS:
            obj.pop(k, None)
        return json.dumps(obj, sort_keys=True)


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json_line() + "\n")


def read_records(path) -> list[RunRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(RunRecord.from_json_line(line))
    return out


@dataclass
class TableRow:
    design: str
    estimator: str
    n_train: int
    n_runs: int
    mean_mse: float
    stderr_mse: float


def aggregate(records) -> list[TableRow]:
    """Mean and standard error (sample std / sqrt(runs)) of test MSE per cell."""
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        groups.setdefault((rec.design, rec.estimator, rec.n_train), []).append(rec.test_mse)
    rows = []
    for (design, estimator, n_train), vals in sorted(groups.items()):
        arr = np.asarray(vals, dtype=float)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        rows.append(TableRow(design, estimator, n_train, arr.size, float(arr.mean()), stderr))
    return rows


def render_table(rows, fmt: str = "text") -> str:
    if fmt == "csv":
        lines = ["design,estimator,n_train,n_runs,mean_test_mse,stderr_test_mse"]
        for r in rows:
            lines.append(f"{r.design},{r.estimator},{r.n_train},{r.n_runs},{r.mean_mse!r},{r.stderr_mse!r}")
        return "\n".join(lines) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown table format {fmt!r}")
    header = f"{'design':<16}{'estimator':<12}{'n':>6}{'runs':>6}{'test MSE (mean ± stderr)':>30}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.design:<16}{r.estimator:<12}{r.n_train:>6}{r.n_runs:>6}"
            f"{r.mean_mse:>18.4g} ± {r.stderr_mse:<10.3g}"
        )
    return "\n".join(lines) + "\n"
