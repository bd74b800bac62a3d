#!/usr/bin/env python3
"""
raogeo: Rao distances, conformal angle checks and 3D scene reports

Command-line front end. Reports are CSV (quantity,value,units,status)
written to stdout or to -o; progress and errors go to stderr.

Exit status:
    0  success, no error rows
    1  library error, failed check, or an error row in the report
    2  usage error
    3  conformal check hit a critical point (f' = 0)
"""

import argparse
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from conformal import (
    DEFAULT_ANGLE_TOL,
    PARAMETRIZATIONS,
    Arc,
    CriticalPointError,
    angle_preservation_check,
    arc_length,
    get_map,
)
from geodesic import (
    BoundaryExitError,
    ShootingError,
    SingularMetricError,
    SolverConfig,
    closed_form_distance,
    rao_distance_1d,
    solve_geodesic,
)
from differential import DomainError, EvaluationError
from scene3d import DegenerateRayError
from scene_io import (
    DEFAULT_HEIGHT_TOL,
    PROJECTIONS,
    SceneParseError,
    has_errors,
    read_scene,
    render_scene_svg,
    report_frame,
    row,
    scene_report_rows,
    write_report,
)
from stat_manifold import (
    FAMILY_NAMES,
    ParamPoint,
    QuadratureError,
    burbea_rao_tensor,
    fisher_information,
    get_family,
    multinomial_alpha_tensor,
    tensor_rank,
)

TOL_ENV = 'RAOGEO_TOL'
DEFAULT_SHOOT_TOL = 1e-8
SCENE_SUFFIX = '.scene'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CRITICAL = 3

LIBRARY_ERRORS = (
    DomainError, EvaluationError, QuadratureError, SingularMetricError, BoundaryExitError,
    ShootingError, DegenerateRayError, SceneParseError, OSError,
)


class UsageError(Exception):
    """Bad command-line input detected after argparse."""


def parse_reals(text: str) -> List[float]:
    """'0.2,0.3,0.5' -> [0.2, 0.3, 0.5]"""
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def resolve_tol(flag: Optional[float], default: float) -> float:
    """Tolerance precedence: command-line flag, then RAOGEO_TOL, then the default."""
    if flag is not None:
        value, source = flag, '--tol'
    elif os.environ.get(TOL_ENV, '').strip():
        source = TOL_ENV
        try:
            value = float(os.environ[TOL_ENV])
        except ValueError:
            raise UsageError(f"{TOL_ENV}='{os.environ[TOL_ENV]}' is not a number") from None
    else:
        return default
    if not (math.isfinite(value) and value >= 0):
        raise UsageError(f"{source} must be a finite non-negative number, got {value}")
    return value


def _emit(rows, out) -> int:
    write_report(rows, out)
    if out not in (None, '-'):
        print(f"✓ Report written to {out}", file=sys.stderr)
    return EXIT_FAILURE if has_errors(rows) else EXIT_OK


def _family_and_point(args, theta):
    fam = get_family(args.family, len(theta))
    return fam, ParamPoint(theta)


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_scene_report(args) -> int:
    tol = resolve_tol(args.tol, DEFAULT_HEIGHT_TOL)
    scene = read_scene(args.scene)
    return _emit(scene_report_rows(scene, tol), args.output)


def cmd_scene_render(args) -> int:
    scene = read_scene(args.scene)
    path = render_scene_svg(scene, args.output, args.projection)
    print(f"✓ SVG written to {path}", file=sys.stderr)
    return EXIT_OK


def cmd_scene_batch(args) -> int:
    """Report every *.scene file of a directory into one CSV with a leading scene column."""
    tol = resolve_tol(args.tol, DEFAULT_HEIGHT_TOL)
    scene_dir = Path(args.dir)
    if not scene_dir.is_dir():
        raise UsageError(f"Scene directory not found: {scene_dir}")
    paths = sorted(scene_dir.glob(f'*{SCENE_SUFFIX}'))
    if not paths:
        raise UsageError(f"No {SCENE_SUFFIX} files in {scene_dir}")

    print("=" * 60, file=sys.stderr)
    print("Scene Batch Report", file=sys.stderr)
    print("=" * 60, file=sys.stderr)

    frames, results = [], []
    for path in paths:
        try:
            rows = scene_report_rows(read_scene(path), tol)
        except (SceneParseError, OSError, DomainError) as e:
            print(f"  ✗ {path.name}: {e}", file=sys.stderr)
            results.append((path.name, False))
            continue
        ok = not has_errors(rows)
        print(f"  {'✓' if ok else '⚠'} {path.name}", file=sys.stderr)
        frame = report_frame(rows)
        frame.insert(0, 'scene', path.stem)
        frames.append(frame)
        results.append((path.name, ok))

    if frames:
        combined = pd.concat(frames, ignore_index=True)
        out = sys.stdout if args.output in (None, '-') else args.output
        combined.to_csv(out, index=False, lineterminator='\n')

    passed = sum(ok for _, ok in results)
    print(f"\nProcessed {len(results)} scene(s): {passed} clean, {len(results) - passed} with errors",
          file=sys.stderr)
    return EXIT_OK if passed == len(results) else EXIT_FAILURE


def cmd_rao(args) -> int:
    if args.theta2 is None:
        raise UsageError("rao needs --theta2")
    fam, a = _family_and_point(args, args.theta)
    b = ParamPoint(args.theta2)
    cfg = SolverConfig(shoot_tol=resolve_tol(args.tol, DEFAULT_SHOOT_TOL))

    result = solve_geodesic(fam, a, b, cfg)
    rows = [row('rao_distance', result.length)]
    if args.verbose:
        rows += [
            row('shoot_iterations', result.iterations),
            row('shoot_residual', result.residual),
            row('shoot_starts', result.starts),
        ]
        chart_fam, _ = fam.geodesic_chart()
        if chart_fam.dim == 1:
            rows.append(row('rao_distance_1d', rao_distance_1d(fam, a, b)))
        try:
            rows.append(row('closed_form_distance', closed_form_distance(fam, a, b)))
        except DomainError:
            pass
        print(f"  chart: {result.chart}, iterations: {result.iterations}, "
              f"residual: {result.residual:.3g}", file=sys.stderr)
    return _emit(rows, args.output)


def _tensor_rows(prefix: str, entries) -> list:
    n = entries.shape[0]
    return [row(f'{prefix}_{i + 1}_{j + 1}', entries[i, j]) for i in range(n) for j in range(n)]


def cmd_fisher(args) -> int:
    fam, p = _family_and_point(args, args.theta)
    F = fisher_information(fam, p)
    rows = _tensor_rows('fisher', F.entries)
    if args.verbose:
        rows.append(row('tensor_rank', tensor_rank(F)))
    return _emit(rows, args.output)


def cmd_burbea_rao(args) -> int:
    if args.alpha is None:
        raise UsageError("burbea-rao needs --alpha")
    if args.multinomial_tensor and args.family not in (None, 'multinomial'):
        raise UsageError(f"--multinomial-tensor works on the multinomial family, not {args.family}")
    if not args.multinomial_tensor and args.family is None:
        raise UsageError("burbea-rao needs --family (or --multinomial-tensor)")
    if args.multinomial_tensor:
        G = multinomial_alpha_tensor(args.theta, args.alpha)
        rows = _tensor_rows('burbea_rao', G.entries) + [row('tensor_rank', G.rank)]
    else:
        fam, p = _family_and_point(args, args.theta)
        G = burbea_rao_tensor(fam, p, args.alpha)
        rows = _tensor_rows('burbea_rao', G.entries)
        if args.verbose:
            rows.append(row('tensor_rank', tensor_rank(G)))
    return _emit(rows, args.output)


def cmd_arc_length(args) -> int:
    arc = Arc.from_spec(args.arc).validate()
    rep = PARAMETRIZATIONS[args.psi](arc.a, arc.b)
    return _emit([row('arc_length', arc_length(arc, rep))], args.output)


def cmd_conformal_check(args) -> int:
    if len(args.arc) != 2:
        raise UsageError(f"conformal check needs exactly two --arc descriptors, got {len(args.arc)}")
    f = get_map(args.map)
    arc1, arc2 = (Arc.from_spec(spec) for spec in args.arc)
    tol = resolve_tol(args.tol, DEFAULT_ANGLE_TOL)

    try:
        report = angle_preservation_check(f, arc1, arc2, args.at, tol)
    except CriticalPointError as e:
        print(f"✗ Critical point: {e}", file=sys.stderr)
        return EXIT_CRITICAL

    rows = [
        row('theta1', report.theta1),
        row('theta2', report.theta2),
        row('image_theta1', report.image_theta1),
        row('image_theta2', report.image_theta2),
        row('source_angle', report.source_angle),
        row('image_angle', report.image_angle),
        row('angle_discrepancy', report.discrepancy),
        row('angle_preserved', 1.0 if report.passed else 0.0, status='ok' if report.passed else 'fail'),
    ]
    code = _emit(rows, args.output)
    marker = '✓ angle preserved' if report.passed else '✗ angle NOT preserved'
    print(f"{marker}: source {report.source_angle:.10g} rad, image {report.image_angle:.10g} rad "
          f"(tol {tol:g})", file=sys.stderr)
    if not report.holomorphic:
        print(f"⚠ {f.label} fails the Cauchy-Riemann check at {report.point}", file=sys.stderr)
    return code


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def _add_output(parser):
    parser.add_argument('-o', '--output', default=None, help="Output file (default: stdout)")


def _add_family_args(parser, theta2: bool = False, alpha: bool = False, family_required: bool = True):
    parser.add_argument('--family', required=family_required, choices=FAMILY_NAMES, default=None,
                        help='Statistical family')
    parser.add_argument('--theta', required=True, type=parse_reals,
                        help='Parameter vector, comma-separated (e.g. 0.2,0.3,0.5)')
    if theta2:
        parser.add_argument('--theta2', type=parse_reals, default=None, help='Second parameter vector')
    if alpha:
        parser.add_argument('--alpha', type=float, default=None, help='Order of the Burbea-Rao metric')
    parser.add_argument('--verbose', action='store_true', help='Add diagnostic rows')
    _add_output(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='raogeo.py',
        description='Rao distances, conformal angle checks and 3D scene reports.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python raogeo.py scene report scenes/orthogonal.scene          # distances, angles, L(C1)..L(C5)
  python raogeo.py scene render scenes/orthogonal.scene -o o.svg --projection xz
  python raogeo.py scene batch --dir scenes -o all_scenes.csv
  python raogeo.py rao --family poisson --theta 1 --theta2 4 --verbose
  python raogeo.py fisher --family normal --theta 0,2
  python raogeo.py burbea-rao --theta 0.2,0.3,0.5 --alpha 2 --multinomial-tensor
  python raogeo.py arc length --arc "circle 0 0 1 0 3.141592653589793" --psi quadratic
  python raogeo.py conformal check --map square --arc "line 0 1 2 1" --arc "line 1 0 1 2" --at 0.5

Tolerances: --tol overrides RAOGEO_TOL, which overrides the built-in default.
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    scene = commands.add_parser('scene', help='Four-point scene reports').add_subparsers(dest='action', required=True)
    report = scene.add_parser('report', help='CSV of distances, view angles and ray arc lengths')
    report.add_argument('scene', help='Scene file')
    report.add_argument('--tol', type=float, default=None, help='Height tolerance for single-plane feasibility')
    _add_output(report)
    report.set_defaults(handler=cmd_scene_report)

    render = scene.add_parser('render', help='SVG projection of the scene')
    render.add_argument('scene', help='Scene file')
    render.add_argument('-o', '--output', required=True, help='SVG file to write')
    render.add_argument('--projection', choices=sorted(PROJECTIONS), default='xy', help='Coordinate plane')
    render.set_defaults(handler=cmd_scene_render)

    batch = scene.add_parser('batch', help='Report every scene file of a directory')
    batch.add_argument('--dir', required=True, help='Directory of .scene files')
    batch.add_argument('--tol', type=float, default=None, help='Height tolerance for single-plane feasibility')
    _add_output(batch)
    batch.set_defaults(handler=cmd_scene_batch)

    rao = commands.add_parser('rao', help='Rao distance between two parameter points')
    _add_family_args(rao, theta2=True)
    rao.add_argument('--tol', type=float, default=None, help='Shooting tolerance')
    rao.set_defaults(handler=cmd_rao)

    fisher = commands.add_parser('fisher', help='Fisher information matrix')
    _add_family_args(fisher)
    fisher.set_defaults(handler=cmd_fisher)

    burbea = commands.add_parser('burbea-rao', help='Burbea-Rao alpha-order metric tensor')
    _add_family_args(burbea, alpha=True, family_required=False)
    burbea.add_argument('--multinomial-tensor', action='store_true',
                        help='Multinomial tensor with all n probabilities as coordinates (reports its rank); '
                             '--family may be omitted')
    burbea.set_defaults(handler=cmd_burbea_rao)

    arc = commands.add_parser('arc', help='Arc utilities').add_subparsers(dest='action', required=True)
    length = arc.add_parser('length', help='Arc length under a reparametrization')
    length.add_argument('--arc', required=True, help="'line x0 y0 x1 y1', 'circle cx cy r t0 t1' or 'polyline ...'")
    length.add_argument('--psi', choices=sorted(PARAMETRIZATIONS), default='identity', help='Reparametrization')
    _add_output(length)
    length.set_defaults(handler=cmd_arc_length)

    conformal = commands.add_parser('conformal', help='Conformal map checks').add_subparsers(dest='action', required=True)
    check = conformal.add_parser('check', help='Angle preservation at an arc intersection')
    check.add_argument('--map', required=True, help='identity, square, exp, reciprocal or conjugate')
    check.add_argument('--arc', action='append', default=[], help='Arc descriptor (give twice)')
    check.add_argument('--at', type=float, required=True, help='Common parameter c where the arcs meet')
    check.add_argument('--tol', type=float, default=None, help='Angle tolerance in radians')
    _add_output(check)
    check.set_defaults(handler=cmd_conformal_check)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return args.handler(args)
    except UsageError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LIBRARY_ERRORS as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
