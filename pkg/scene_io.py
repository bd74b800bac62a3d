"""
Scene Files, CSV Reports and SVG Projections

Scene file format, one point per line, '#' starts a comment:

    # tourist spot
    A0 = 0 0 0
    B0 = 0 0 1
    C0 = 1 0 0
    C1 = 0 1 0

Reports are CSV with columns quantity,value,units,status. Values carry 10
significant digits. A quantity that cannot be computed gets an empty value
and a status other than 'ok'; no NaN is ever written.

Example usage:
    scene = read_scene('scenes/orthogonal.scene')
    rows = scene_report_rows(scene)
    write_report(rows, 'orthogonal.csv')
    render_scene_svg(scene, 'orthogonal.svg', projection='xy')
"""

import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Union

import pandas as pd
from matplotlib import rc_context
from matplotlib.figure import Figure

from scene3d import (
    LABELS,
    PLANE_IDS,
    DegenerateRayError,
    Scene,
    five_distances,
    ray_arc_length,
    scene_rays,
    single_plane_feasibility,
    view_angles,
)

REPORT_COLUMNS = ['quantity', 'value', 'units', 'status']
STATUS_OK = 'ok'
DEFAULT_HEIGHT_TOL = 1e-9
PROJECTIONS = {'xy': (0, 1), 'xz': (0, 2), 'yz': (1, 2)}
SVG_HASHSALT = 'raogeo'

QUANTITIES: Dict[str, str] = {
    'a0c0': 'length',
    'a0c1': 'length',
    'b0a0': 'length',
    'b0c0': 'length',
    'b0c1': 'length',
    'alpha': 'radians',
    'beta1': 'radians',
    'beta2': 'radians',
    'height_spread': 'length',
    'single_plane_feasible': 'dimensionless',
    **{f'L_{plane_id}': 'length' for plane_id in PLANE_IDS},
    'rao_distance': 'dimensionless',
    'rao_distance_1d': 'dimensionless',
    'closed_form_distance': 'dimensionless',
    'shoot_iterations': 'dimensionless',
    'shoot_residual': 'dimensionless',
    'shoot_starts': 'dimensionless',
    'tensor_rank': 'dimensionless',
    'arc_length': 'length',
    'theta1': 'radians',
    'theta2': 'radians',
    'image_theta1': 'radians',
    'image_theta2': 'radians',
    'source_angle': 'radians',
    'image_angle': 'radians',
    'angle_discrepancy': 'radians',
    'angle_preserved': 'dimensionless',
}
# Tensor entries, 1-based: fisher_1_2, burbea_rao_2_2, ...
TENSOR_QUANTITY = re.compile(r'^(fisher|burbea_rao)_\d+_\d+$')


class SceneParseError(ValueError):
    """Malformed scene file; line and column are 1-based."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def parse_scene(text: str) -> Scene:
    """
    Parse 'LABEL = x y z' lines into a Scene.

    Raises:
        SceneParseError: unknown, duplicate or missing label, missing '=',
            wrong number of coordinates, or a non-numeric/non-finite value
    """
    coords = {}
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        content = raw.split('#', 1)[0]
        if not content.strip():
            continue
        if '=' not in content:
            col = len(content) - len(content.lstrip()) + 1
            raise SceneParseError("expected 'LABEL = x y z'", lineno, col)

        left, right = content.split('=', 1)
        label = left.strip()
        label_col = len(left) - len(left.lstrip()) + 1
        if label not in LABELS:
            raise SceneParseError(f"unknown label '{label}' (expected {', '.join(LABELS)})", lineno, label_col)
        if label in coords:
            raise SceneParseError(f"duplicate label '{label}'", lineno, label_col)

        values_start = len(left) + 1
        tokens = [(m.group(), values_start + m.start() + 1) for m in re.finditer(r'\S+', right)]
        if len(tokens) != 3:
            col = tokens[0][1] if tokens else values_start + 1
            raise SceneParseError(f"{label} needs 3 coordinates, got {len(tokens)}", lineno, col)

        values = []
        for token, col in tokens:
            try:
                value = float(token)
            except ValueError:
                raise SceneParseError(f"'{token}' is not a number", lineno, col) from None
            if not math.isfinite(value):
                raise SceneParseError(f"'{token}' is not finite", lineno, col)
            values.append(value)
        coords[label] = values

    missing = [label for label in LABELS if label not in coords]
    if missing:
        raise SceneParseError(f"missing label(s): {', '.join(missing)}", len(lines) + 1, 1)
    return Scene.from_coords(coords)


def read_scene(path: Union[str, Path]) -> Scene:
    return parse_scene(Path(path).read_text(encoding='utf-8'))


def format_scene(scene: Scene) -> str:
    """Scene file text; floats are written with repr so parsing restores them exactly."""
    return ''.join(
        f"{p.label} = {' '.join(repr(float(v)) for v in p.coords)}\n" for p in scene.points
    )


@dataclass
class ReportRow:
    quantity: str
    value: Optional[float]
    units: str
    status: str = STATUS_OK

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


def units_for(quantity: str) -> str:
    """Units of a vocabulary quantity; raises KeyError outside the vocabulary."""
    if quantity in QUANTITIES:
        return QUANTITIES[quantity]
    if TENSOR_QUANTITY.match(quantity):
        return 'dimensionless'
    raise KeyError(f"'{quantity}' is not a report quantity")


def row(quantity: str, value: Optional[float], status: str = STATUS_OK) -> ReportRow:
    """Report row with units from the vocabulary; a non-finite value becomes a flagged empty row."""
    if value is not None and not math.isfinite(value):
        value, status = None, status if status != STATUS_OK else 'non-finite'
    if value is None and status == STATUS_OK:
        status = 'undefined'
    return ReportRow(quantity, None if value is None else float(value), units_for(quantity), status)


def format_value(value: Optional[float]) -> str:
    return '' if value is None else format(value, '.10g')


def report_frame(rows: Sequence[ReportRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.quantity, format_value(r.value), r.units, r.status) for r in rows],
        columns=REPORT_COLUMNS,
    )


def write_report(rows: Sequence[ReportRow], out: Union[None, str, Path, TextIO] = None) -> None:
    """Write rows as CSV to a path, an open stream, or stdout when out is None or '-'."""
    frame = report_frame(rows)
    if out is None or out == '-':
        out = sys.stdout
    frame.to_csv(out, index=False, lineterminator='\n')


def read_report(path: Union[str, Path]) -> List[ReportRow]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is not a report (missing column(s) {', '.join(missing)})")
    return [
        ReportRow(r.quantity, float(r.value) if r.value else None, r.units, r.status)
        for r in frame.itertuples(index=False)
    ]


def has_errors(rows: Sequence[ReportRow]) -> bool:
    return any(not r.ok for r in rows)


def scene_report_rows(scene: Scene, tol: float = DEFAULT_HEIGHT_TOL) -> List[ReportRow]:
    """Distances, view angles, height spread, feasibility and identity-parametrized L(C1)..L(C5)."""
    rows = [row(name, value) for name, value in five_distances(scene).as_dict().items()]

    angles = view_angles(scene)
    for name, value in angles.as_dict().items():
        cause = angles.flags.get(name)
        rows.append(row(name, value, status=f"undefined: {cause}" if cause else STATUS_OK))

    feasibility = single_plane_feasibility(scene, tol)
    rows.append(row('height_spread', feasibility.spread))
    rows.append(row('single_plane_feasible', 1.0 if feasibility.feasible else 0.0))

    for plane_id in PLANE_IDS:
        try:
            rows.append(row(f'L_{plane_id}', ray_arc_length(scene, plane_id)))
        except DegenerateRayError as e:
            rows.append(row(f'L_{plane_id}', None, status=f"degenerate: {e}"))
    return rows


def render_scene_svg(scene: Scene, out_path: Union[str, Path], projection: str = 'xy') -> Path:
    """
    Deterministic SVG of the scene projected onto a coordinate plane: the four
    labelled points, the five rays (gid 'ray-C1' ... 'ray-C5') and the view
    angles in the title.

    Raises:
        ValueError: unknown projection
    """
    if projection not in PROJECTIONS:
        raise ValueError(f"Unknown projection '{projection}'. Choose from: {', '.join(PROJECTIONS)}")
    i, j = PROJECTIONS[projection]
    out_path = Path(out_path)

    angles = view_angles(scene)
    title = '   '.join(
        f"{name} = {'undefined' if value is None else f'{math.degrees(value):.2f} deg'}"
        for name, value in angles.as_dict().items()
    )

    with rc_context({'svg.hashsalt': SVG_HASHSALT, 'svg.fonttype': 'none', 'path.simplify': False}):
        fig = Figure(figsize=(6, 6))
        ax = fig.add_subplot(1, 1, 1)
        for plane_id, p, q in scene_rays(scene):
            ax.plot([p[i], q[i]], [p[j], q[j]], linewidth=1.2, gid=f'ray-{plane_id}')
        for point in scene.points:
            ax.plot([point.coords[i]], [point.coords[j]], 'ko', markersize=4, gid=f'point-{point.label}')
            ax.annotate(point.label, (point.coords[i], point.coords[j]),
                        textcoords='offset points', xytext=(5, 5))
        ax.set_xlabel(projection[0])
        ax.set_ylabel(projection[1])
        ax.set_title(title, fontsize=9)
        ax.set_aspect('equal', adjustable='datalim')
        ax.margins(0.15)
        fig.savefig(out_path, format='svg', metadata={'Date': None})
    return out_path

