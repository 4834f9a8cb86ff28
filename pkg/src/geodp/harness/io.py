"""CSV readers and writers for landmarks, benchmark rows and summaries."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..errors import EmptyInputError, FormatError

RESULT_COLUMNS = (
    "manifold",
    "mechanism",
    "n",
    "replicate",
    "utility_euclidean",
    "utility_intrinsic",
    "seed",
    "wall_ms",
    "error",
)

SUMMARY_COLUMNS = (
    "manifold",
    "mechanism",
    "n",
    "count",
    "mean_utility",
    "two_se",
    "mean_sq_intrinsic",
)


def fmt(x) -> str:
    """Shortest-roundtrip-safe float text; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def load_landmarks(path) -> np.ndarray:
    """Read one configuration per line as ``x1,y1,...,xk,yk``.

    Lines starting with ``#`` and blank lines are skipped.  Returns a
    complex array of shape ``(count, k)``.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f.strip() for f in text.split(",")]
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise FormatError(f"non-numeric field in {text[:40]!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise FormatError("non-finite coordinate", line=lineno)
            if len(vals) % 2:
                raise FormatError(f"odd number of coordinates ({len(vals)})", line=lineno)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise FormatError(
                    f"shape has {len(vals) // 2} landmarks, expected {width // 2}", line=lineno
                )
            rows.append(vals)
    if not rows:
        raise EmptyInputError(f"{path}: no landmark configurations found")
    arr = np.asarray(rows)
    return arr[:, 0::2] + 1j * arr[:, 1::2]


def write_landmarks(configs, path, header=True):
    configs = np.atleast_2d(np.asarray(configs, dtype=complex))
    k = configs.shape[-1]
    with open(path, "w", newline="") as fh:
        if header:
            fh.write("# " + ",".join(f"x{j},y{j}" for j in range(1, k + 1)) + "\n")
        for z in configs:
            fh.write(",".join(f"{fmt(c.real)},{fmt(c.imag)}" for c in z) + "\n")


def write_results(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow(r.as_fields())


def read_results(path):
    """Load a results CSV back into dictionaries with typed values."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise FormatError(f"{path}: unexpected header {reader.fieldnames}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                out.append(
                    {
                        "manifold": rec["manifold"],
                        "mechanism": rec["mechanism"],
                        "n": int(rec["n"]),
                        "replicate": int(rec["replicate"]),
                        "utility_euclidean": float(rec["utility_euclidean"] or "nan"),
                        "utility_intrinsic": float(rec["utility_intrinsic"] or "nan"),
                        "seed": int(rec["seed"]),
                        "wall_ms": float(rec["wall_ms"]),
                        "error": rec["error"],
                    }
                )
            except (TypeError, ValueError) as exc:
                raise FormatError(str(exc), line=lineno) from None
    return out


def _get(row, key):
    return row[key] if isinstance(row, dict) else getattr(row, key)


def summarize(rows):
    """Per (mechanism, n) mean utility and 2 SE over rows without errors.

    Groups appear in first-seen order of mechanism, then ascending ``n``.
    """
    groups = defaultdict(list)
    mech_order = []
    manifold = {}
    for r in rows:
        mech = _get(r, "mechanism")
        if mech not in mech_order:
            mech_order.append(mech)
        key = (mech, _get(r, "n"))
        groups.setdefault(key, [])
        manifold[mech] = _get(r, "manifold")
        if not _get(r, "error"):
            groups[key].append((_get(r, "utility_euclidean"), _get(r, "utility_intrinsic")))
    out = []
    for mech in mech_order:
        for n in sorted(n for (m, n) in groups if m == mech):
            vals = groups[(mech, n)]
            u = np.array([v[0] for v in vals], dtype=float)
            q = np.array([v[1] for v in vals], dtype=float)
            count = len(u)
            mean = float(u.mean()) if count else math.nan
            two_se = float(2 * u.std(ddof=1) / math.sqrt(count)) if count > 1 else math.nan
            q = q[np.isfinite(q)]
            msq = float(np.mean(q**2)) if len(q) else math.nan
            out.append(
                {
                    "manifold": manifold[mech],
                    "mechanism": mech,
                    "n": n,
                    "count": count,
                    "mean_utility": mean,
                    "two_se": two_se,
                    "mean_sq_intrinsic": msq,
                }
            )
    return out


def write_summary(rows, path):
    summary = summarize(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summary:
            w.writerow(
                [
                    s["manifold"],
                    s["mechanism"],
                    s["n"],
                    s["count"],
                    fmt(s["mean_utility"]),
                    fmt(s["two_se"]),
                    fmt(s["mean_sq_intrinsic"]),
                ]
            )
    return summary


def write_gnuplot(summary_path, plot_path, mechanisms, title=""):
    """Emit a gnuplot script drawing mean utility +- 2 SE against n."""
    summary_path = Path(summary_path)
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'sample size n'",
        "set ylabel 'mean utility distance'",
        f"set title '{title}'",
        "set key top right",
    ]
    plots = []
    for mech in mechanisms:
        sel = f"(strcol(2) eq '{mech}' ? $5 : 1/0)"
        plots.append(f"'{summary_path.name}' every ::1 using 3:{sel}:6 with yerrorlines title '{mech}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(plot_path).write_text("\n".join(lines) + "\n")
