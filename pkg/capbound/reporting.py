"""
Serialization of matrices, programs and sweep results.

Matrices are written as {"dim": [rows, cols], "data": [[re, im], ...]} with
the entries in row-major order. CSV files start with "# key: value" metadata
lines and carry every number with 12 significant digits. Figures are SVG
documents rendered by matplotlib's Agg backend with a fixed hash salt and no
date metadata, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from numpy.typing import ArrayLike, NDArray  # noqa: E402

from .capacity import BoundReport, envelope_resolution  # noqa: E402
from .channels import ChoiChannel, ChoiMap, HermitianMapDiff  # noqa: E402
from .config import RunConfig  # noqa: E402
from .const import (  # noqa: E402
    BOUNDS_CSV,
    BOUNDS_SVG,
    CSV_SIGNIFICANT_DIGITS,
    NORMS_CSV,
    NORMS_SVG,
    REPORT_JSON,
)
from .exceptions import DimensionMismatch, ValidationError  # noqa: E402
from .sdp import ConeKind, SdpProblem, SdpSolution  # noqa: E402

_LOGGER = logging.getLogger(__name__)

_SVG_SALT = "capbound"

BOUNDS_COLUMNS = [
    "p",
    "q1",
    "eps_diamond",
    "eps_1",
    "nu",
    "beta",
    "hypothesis_ok",
    "bound_sutter",
    "bound_new",
    "s_phi_lambda",
    "corr_quantum",
    "corr_private",
    "error",
]

NORMS_COLUMNS = [
    "p",
    "diamond",
    "m1_minus",
    "m1_plus",
    "minf_minus",
    "minf_plus",
    "eps_1",
    "nu",
    "sampled_1",
    "sampled_inf",
    "nu_cb",
    "max_gap",
]


# JSON matrix format


def matrix_to_json(m: ArrayLike) -> dict[str, Any]:
    """Encode a real or complex matrix as dims plus row-major [re, im] pairs."""
    arr = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    if arr.ndim != 2:
        raise DimensionMismatch(f"Expected a matrix, got shape {arr.shape}")
    flat = arr.reshape(-1)
    return {
        "dim": [int(arr.shape[0]), int(arr.shape[1])],
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: Mapping[str, Any]) -> NDArray[np.complex128]:
    """
    Decode a matrix written by matrix_to_json.

    Raises:
        ValidationError: missing keys or malformed entries
        DimensionMismatch: entry count does not match the dims
    """
    try:
        rows, cols = (int(x) for x in obj["dim"])
        pairs = np.asarray(obj["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError(f"Malformed matrix JSON: {err}") from err
    if pairs.size == 0 and rows * cols == 0:
        return np.zeros((rows, cols), dtype=np.complex128)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError("Matrix entries must be [re, im] pairs")
    if pairs.shape[0] != rows * cols:
        raise DimensionMismatch(f"{pairs.shape[0]} entries for a {rows}x{cols} matrix")
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(rows, cols)


def channel_to_json(phi: ChoiMap) -> dict[str, Any]:
    """Encode a map with its dimensions and Choi matrix (output factor first)."""
    kind = "channel" if isinstance(phi, ChoiChannel) else "map"
    return {
        "type": kind,
        "dim_in": phi.dim_in,
        "dim_out": phi.dim_out,
        "choi": matrix_to_json(phi.choi),
    }


def channel_from_json(obj: Mapping[str, Any]) -> ChoiMap:
    """
    Decode a map written by channel_to_json.

    Returns:
        ChoiChannel for "channel" records, HermitianMapDiff otherwise
    """
    try:
        dim_in, dim_out = int(obj["dim_in"]), int(obj["dim_out"])
        choi = matrix_from_json(obj["choi"])
    except (KeyError, TypeError) as err:
        raise ValidationError(f"Malformed channel JSON: {err}") from err
    if obj.get("type", "channel") == "channel":
        return ChoiChannel(dim_in, dim_out, choi)
    return HermitianMapDiff(dim_in, dim_out, choi)


def _coefficient_to_json(kind: ConeKind, coeff: NDArray[Any]) -> Any:
    if kind is ConeKind.PSD:
        return matrix_to_json(coeff)
    return [float(x) for x in np.real(coeff)]


def problem_to_json(problem: SdpProblem) -> dict[str, Any]:
    """Debug dump of a standard-form program."""
    kinds = [b.kind for b in problem.blocks]
    return {
        "name": problem.name,
        "sense": str(problem.sense),
        "blocks": [{"kind": str(b.kind), "size": b.size, "name": b.name} for b in problem.blocks],
        "objective": [
            _coefficient_to_json(kinds[k], c) for k, c in enumerate(problem.objective)
        ],
        "constraints": [
            {
                "rhs": float(con.rhs),
                "coefficients": {
                    str(k): _coefficient_to_json(kinds[k], c)
                    for k, c in sorted(con.coefficients.items())
                },
            }
            for con in problem.constraints
        ],
    }


def _finite_or_none(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def solution_to_json(solution: SdpSolution) -> dict[str, Any]:
    """Debug dump of a solution, its certificates and primal point."""
    return {
        "status": str(solution.status),
        "solver": solution.solver,
        "sense": str(solution.sense),
        "primal_value": _finite_or_none(solution.primal_value),
        "dual_value": _finite_or_none(solution.dual_value),
        "upper_bound": _finite_or_none(solution.upper_bound),
        "gap": _finite_or_none(solution.gap),
        "primal_residual": _finite_or_none(solution.primal_residual),
        "dual_slack": _finite_or_none(solution.dual_slack),
        "primal_point": [
            matrix_to_json(x) if x.ndim == 2 else [float(v) for v in np.real(x)]
            for x in solution.primal_point
        ],
        "dual_point": [float(v) for v in solution.dual_point],
    }


def write_json(path: Path, payload: Any) -> Path:
    """Write JSON with sorted keys and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _LOGGER.info("Wrote %s", path)
    return path


# CSV


def format_number(value: float | bool | None) -> str:
    """Format a CSV cell: 12 significant digits, lowercase booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{CSV_SIGNIFICANT_DIGITS}g}"


def format_csv(
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Mapping[str, Any] | None = None,
) -> str:
    """
    Render CSV text preceded by "# key: value" metadata lines.

    Strings are written verbatim, every other cell through format_number.
    """
    buffer = io.StringIO()
    for key, value in (metadata or {}).items():
        buffer.write(f"# {key}: {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else format_number(c) for c in row])
    return buffer.getvalue()


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Mapping[str, Any] | None = None,
) -> Path:
    """Write format_csv output to path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(format_csv(columns, rows, metadata))
    _LOGGER.info("Wrote %s", path)
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Read a file written by write_csv into its metadata and rows."""
    metadata: dict[str, str] = {}
    lines: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
        else:
            lines.append(line)
    return metadata, list(csv.DictReader(lines))


def _metadata(reports: Sequence[BoundReport], config: RunConfig | None) -> dict[str, Any]:
    grid = np.array([r.p for r in reports])
    meta: dict[str, Any] = {"points": len(reports)}
    if config is not None:
        meta.update(
            {
                "seed": config.seed,
                "solver": config.solver,
                "feasibility_tol": format_number(config.feas_tol),
                "gap_tol": format_number(config.gap_tol),
            }
        )
    if len(reports) >= 2:
        for name in ("bound_new", "bound_sutter"):
            values = np.array([getattr(r, name) for r in reports])
            if np.all(np.isfinite(values)):
                meta[f"{name}_resolution"] = format_number(envelope_resolution(grid, values))
    return meta


def bounds_rows(reports: Sequence[BoundReport]) -> list[list[Any]]:
    """Rows of bounds.csv in BOUNDS_COLUMNS order."""
    return [
        [
            r.p,
            r.q1,
            r.eps_diamond,
            r.eps1,
            r.nu,
            r.beta,
            r.hypothesis_ok,
            r.bound_sutter,
            r.bound_new,
            r.s_phi_lambda,
            r.corr_quantum,
            r.corr_private,
            r.error or "",
        ]
        for r in reports
    ]


def norms_rows(reports: Sequence[BoundReport]) -> list[list[Any]]:
    """Rows of norms.csv in NORMS_COLUMNS order."""
    rows: list[list[Any]] = []
    for r in reports:
        b = r.norms
        if b is None:
            rows.append([r.p] + [None] * (len(NORMS_COLUMNS) - 2) + [r.nu_cb])
            continue
        max_gap = max(b.gaps.values()) if b.gaps else None
        rows.append(
            [
                r.p,
                b.diamond,
                b.m1_minus,
                b.m1_plus,
                b.minf_minus,
                b.minf_plus,
                b.eps1,
                b.nu,
                b.sampled_1,
                b.sampled_inf,
                r.nu_cb,
                max_gap,
            ]
        )
    return rows


def report_to_json(report: BoundReport) -> dict[str, Any]:
    """One sweep point as a JSON-ready mapping."""
    return {
        "p": report.p,
        "q1": report.q1,
        "certificate": report.certificate.as_dict() if report.certificate else None,
        "norms": report.norms.as_dict() if report.norms else None,
        "s_phi_lambda": report.s_phi_lambda,
        "corr_quantum": report.corr_quantum,
        "corr_private": report.corr_private,
        "corr_sutter": report.corr_sutter,
        "nu_cb": report.nu_cb,
        "corr_quantum_cbnorm": report.corr_quantum_cbnorm,
        "bound_new": _finite_or_none(report.bound_new),
        "bound_sutter": _finite_or_none(report.bound_sutter),
        "error": report.error,
    }


# Figures


def _save_svg(fig: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    _LOGGER.info("Wrote %s", path)
    return path


def plot_series(
    path: Path,
    x: ArrayLike,
    series: Mapping[str, ArrayLike],
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> Path:
    """Line plot of several named series against one x-axis, written as SVG."""
    fig = plt.figure(figsize=(7.2, 4.4))
    ax = fig.add_subplot(1, 1, 1)
    for label, values in series.items():
        ax.plot(np.asarray(x), np.asarray(values, dtype=np.float64), label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, ls=":")
    ax.legend()
    fig.tight_layout()
    return _save_svg(fig, path)


def plot_bounds(path: Path, reports: Sequence[BoundReport]) -> Path:
    """Capacity bounds against p: Q^(1) lower bound and both upper bounds."""
    p = [r.p for r in reports]
    return plot_series(
        path,
        p,
        {
            "Q1 (lower bound)": [r.q1_floor for r in reports],
            "previous upper bound": [r.bound_sutter for r in reports],
            "new upper bound": [r.bound_new for r in reports],
        },
        "p",
        "quantum capacity (qubits per use)",
        "Depolarizing channel",
    )


def plot_norms(path: Path, reports: Sequence[BoundReport]) -> Path:
    """Degradability parameters against p."""
    p = [r.p for r in reports]
    return plot_series(
        path,
        p,
        {
            "eps_diamond": [r.eps_diamond for r in reports],
            "eps_1": [r.eps1 for r in reports],
            "2 nu": [2.0 * r.nu for r in reports],
        },
        "p",
        "norm",
        "Approximate degradability parameters",
    )


def write_sweep_outputs(
    output_dir: Path, reports: Sequence[BoundReport], config: RunConfig | None = None
) -> list[Path]:
    """
    Write bounds.csv, norms.csv, report.json and both figures.

    Returns:
        Paths of the written files
    """
    meta = _metadata(reports, config)
    payload = {
        "config": config.as_dict() if config else None,
        "metadata": meta,
        "points": [report_to_json(r) for r in reports],
    }
    return [
        write_csv(output_dir / BOUNDS_CSV, BOUNDS_COLUMNS, bounds_rows(reports), meta),
        write_csv(output_dir / NORMS_CSV, NORMS_COLUMNS, norms_rows(reports), meta),
        write_json(output_dir / REPORT_JSON, payload),
        plot_bounds(output_dir / BOUNDS_SVG, reports),
        plot_norms(output_dir / NORMS_SVG, reports),
    ]
