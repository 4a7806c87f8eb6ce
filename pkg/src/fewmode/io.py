"""Readers and writers for the package's CSV and JSON artifacts.

Formats are plain text so plotting tools and scripts can consume them
directly.  Floats are written with 17 significant digits, which round-trips
IEEE doubles exactly; every writer here has a matching reader and the pair
is lossless.

Spectrum tables use the two-column header ``omega_eV,J_eV``.  Model
parameters are JSON with keys ``n_modes``, ``omega`` (row-major nested
lists, symmetric), ``kappa``, and ``g``.  Green's-function tables use the
eight-column header ``point_id,x_nm,y_nm,z_nm,omega_eV,ImGx_per_m,
ImGy_per_m,ImGz_per_m``.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .errors import DataWarning, ParseError, ValidationError
from .field import GreensFunctionTable, IntensityMap, IntensityTraces
from .spectral import ModelParameters, SpectralDensityTable
from .tolerances import DEFAULT_TOLERANCES, Tolerances

SPECTRUM_HEADER = "omega_eV,J_eV"
GREEN_HEADER = "point_id,x_nm,y_nm,z_nm,omega_eV,ImGx_per_m,ImGy_per_m,ImGz_per_m"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _data_lines(path):
    """Yield (line_number, stripped_text) for non-blank lines after the header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("file is empty", path=path)
    for k, raw in enumerate(lines[1:], start=2):
        striped = raw.strip()
        if striped:
            yield k, striped


def _header_of(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    return first.strip()


def read_spectrum(path, *, tol: Tolerances | None = None) -> SpectralDensityTable:
    """Parse a two-column spectrum CSV into a validated table.

    Errors carry the offending line number.  Tiny negative samples are
    clamped (with a DataWarning) per the ingestion tolerance; anything more
    negative is rejected here, pointing at its line.
    """
    tol = tol or DEFAULT_TOLERANCES
    header = _header_of(path)
    if header != SPECTRUM_HEADER:
        raise ParseError(
            f"expected header '{SPECTRUM_HEADER}', found '{header}'", path=path
        )
    omegas, js, lines = [], [], []
    for lineno, text in _data_lines(path):
        cells = text.split(",")
        if len(cells) != 2:
            raise ParseError(f"expected 2 columns, found {len(cells)}", path=path, line=lineno)
        try:
            w, j = float(cells[0]), float(cells[1])
        except ValueError:
            raise ParseError("non-numeric cell", path=path, line=lineno) from None
        omegas.append(w)
        js.append(j)
        lines.append(lineno)
    if not omegas:
        raise ParseError("no data rows", path=path)
    j_arr = np.asarray(js)
    floor = -tol.negative_j_fraction * max(float(np.abs(j_arr).max()), 0.0)
    worst = int(np.argmin(j_arr))
    if j_arr[worst] < floor:
        raise ParseError(
            f"J = {j_arr[worst]:g} is negative beyond the clamping tolerance",
            path=path, line=lines[worst],
        )
    return SpectralDensityTable.from_samples(np.asarray(omegas), j_arr, tol=tol)


def write_spectrum(path, table: SpectralDensityTable) -> None:
    rows = [SPECTRUM_HEADER]
    rows += [
        f"{_fmt(w)},{_fmt(j)}" for w, j in zip(table.omega_grid, table.j_values)
    ]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_params(path) -> ModelParameters:
    """Load model parameters from JSON, validating shape and symmetry."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path) from None
    if not isinstance(payload, dict):
        raise ParseError("expected a JSON object at the top level", path=path)
    missing = [k for k in ("n_modes", "omega", "kappa", "g") if k not in payload]
    if missing:
        raise ParseError(f"missing keys: {', '.join(missing)}", path=path)
    n = payload["n_modes"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("n_modes must be a positive integer", path=path)
    try:
        omega = np.array(payload["omega"], dtype=float)
        kappa = np.array(payload["kappa"], dtype=float)
        g = np.array(payload["g"], dtype=float)
    except (TypeError, ValueError):
        raise ParseError("omega, kappa, g must be numeric arrays", path=path) from None
    if omega.shape != (n, n):
        raise ParseError(
            f"omega must be {n}x{n} row-major, got shape {omega.shape}", path=path
        )
    if kappa.shape != (n,) or g.shape != (n,):
        raise ParseError(f"kappa and g must have length {n}", path=path)
    try:
        return ModelParameters(omega=omega, kappa=kappa, g=g)
    except ValidationError as exc:
        raise ParseError(str(exc), path=path) from None


def write_params(path, params: ModelParameters) -> None:
    payload = {
        "n_modes": params.n_modes,
        "omega": [[float(x) for x in row] for row in params.omega],
        "kappa": [float(x) for x in params.kappa],
        "g": [float(x) for x in params.g],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_poles(path, poles) -> None:
    """Write a pole set as CSV: re_eV,im_eV,residue_re,residue_im."""
    rows = ["re_eV,im_eV,residue_re,residue_im"]
    for v, r in zip(poles.values, poles.residues):
        rows.append(f"{_fmt(v.real)},{_fmt(v.imag)},{_fmt(r.real)},{_fmt(r.imag)}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_green_table(path) -> GreensFunctionTable:
    """Parse a Green's-function CSV into a validated multi-point table.

    Points are kept in first-appearance order; rows within a point are
    sorted by frequency (with a DataWarning if that reorders anything), and
    all points must share the identical frequency grid.
    """
    header = _header_of(path)
    if header != GREEN_HEADER:
        raise ParseError(f"expected header '{GREEN_HEADER}', found '{header}'", path=path)
    order = []
    rows = {}
    coords = {}
    for lineno, text in _data_lines(path):
        cells = text.split(",")
        if len(cells) != 8:
            raise ParseError(f"expected 8 columns, found {len(cells)}", path=path, line=lineno)
        pid = cells[0].strip()
        if not pid:
            raise ParseError("empty point_id", path=path, line=lineno)
        try:
            numbers = [float(c) for c in cells[1:]]
        except ValueError:
            raise ParseError("non-numeric cell", path=path, line=lineno) from None
        xyz = tuple(numbers[0:3])
        if pid not in rows:
            order.append(pid)
            rows[pid] = []
            coords[pid] = xyz
        elif coords[pid] != xyz:
            raise ParseError(
                f"point '{pid}' moved; coordinates must be constant per point",
                path=path, line=lineno,
            )
        rows[pid].append((numbers[3], numbers[4:7]))
    if not order:
        raise ParseError("no data rows", path=path)

    grids = {}
    values = {}
    sorted_any = False
    for pid in order:
        entries = rows[pid]
        omegas = np.array([e[0] for e in entries])
        table = np.array([e[1] for e in entries])
        idx = np.argsort(omegas, kind="stable")
        if not np.array_equal(idx, np.arange(len(entries))):
            sorted_any = True
        grids[pid] = omegas[idx]
        values[pid] = table[idx]
    if sorted_any:
        warnings.warn(
            "Green's-function rows were not sorted by frequency; sorting",
            DataWarning, stacklevel=2,
        )
    reference = grids[order[0]]
    for pid in order[1:]:
        if grids[pid].shape != reference.shape or np.any(grids[pid] != reference):
            raise ParseError(
                f"point '{pid}' has a different frequency grid than "
                f"point '{order[0]}'; all points must share one grid",
                path=path,
            )
    return GreensFunctionTable(
        point_ids=tuple(order),
        coordinates=np.array([coords[p] for p in order]),
        omega_grid=reference,
        im_g_projected=np.stack([values[p] for p in order]),
    )


def write_green_table(path, gtable: GreensFunctionTable) -> None:
    rows = [GREEN_HEADER]
    for p, pid in enumerate(gtable.point_ids):
        x, y, z = gtable.coordinates[p]
        for m, w in enumerate(gtable.omega_grid):
            gx, gy, gz = gtable.im_g_projected[p, m]
            rows.append(
                f"{pid},{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(w)},"
                f"{_fmt(gx)},{_fmt(gy)},{_fmt(gz)}"
            )
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_trajectory(path, traj, tilde_pops=None) -> None:
    """Write population traces as CSV: t_fs, pop_e, pop_mode_i, pop_tilde_i.

    Mode columns are omitted when the trajectory carries no mode amplitudes
    (the continuum solver).  ``tilde_pops`` appends normal-mode populations
    as extra columns.
    """
    cols = [np.asarray(traj.times), np.asarray(traj.emitter_population)]
    names = ["t_fs", "pop_e"]
    if traj.c_modes is not None:
        pops = traj.mode_populations
        for i in range(pops.shape[1]):
            cols.append(pops[:, i])
            names.append(f"pop_mode_{i + 1}")
    if tilde_pops is not None:
        tilde_pops = np.asarray(tilde_pops)
        if tilde_pops.shape[0] != cols[0].size:
            raise ValidationError("tilde populations do not match the time grid")
        for i in range(tilde_pops.shape[1]):
            cols.append(tilde_pops[:, i])
            names.append(f"pop_tilde_{i + 1}")
    rows = [",".join(names)]
    for k in range(cols[0].size):
        rows.append(",".join(_fmt(c[k]) for c in cols))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_table_csv(path) -> dict:
    """Read any numeric CSV written by this module into {column: array}.

    The first column may be non-numeric (point ids); all others must parse
    as floats.
    """
    header = _header_of(path)
    if not header:
        raise ParseError("file is empty", path=path)
    names = header.split(",")
    raw = [[] for _ in names]
    for lineno, text in _data_lines(path):
        cells = text.split(",")
        if len(cells) != len(names):
            raise ParseError(
                f"expected {len(names)} columns, found {len(cells)}",
                path=path, line=lineno,
            )
        for col, cell in zip(raw, cells):
            col.append(cell)
    out = {}
    for name, col in zip(names, raw):
        try:
            out[name] = np.array([float(c) for c in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def write_intensity_traces(path, traces: IntensityTraces) -> None:
    rows = ["point_id,t_fs,intensity_W_per_m2"]
    for p, pid in enumerate(traces.point_ids):
        for k, t in enumerate(traces.times):
            rows.append(f"{pid},{_fmt(t)},{_fmt(traces.values[p, k])}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_intensity_raster(path, snapshot: IntensityMap, index: int) -> None:
    """Write one spatial snapshot (row ``index`` of the map) as CSV."""
    name = "intensity_normalized" if snapshot.normalized else "intensity_W_per_m2"
    rows = [f"point_id,x_nm,y_nm,z_nm,{name}"]
    for p, pid in enumerate(snapshot.point_ids):
        x, y, z = snapshot.coordinates[p]
        rows.append(
            f"{pid},{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(snapshot.values[index, p])}"
        )
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path) from None
