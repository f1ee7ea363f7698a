"""Command-line interface.

Subcommands: describe, classify, sweep, control, equilibrium, oracle.
Exit codes: 0 success, 1 input/validation error, 2 numerical failure
(non-convergence or unmet goal; the report is still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _serialize
from .control import (
    MorphologyGoal,
    critical_joints_of,
    solve_morphology_control,
)
from .model import (
    Configuration,
    RobotModel,
    forward_kinematics,
    load_model,
)
from .morse import (
    DEFAULT_EPS_DEG,
    DEFAULT_EPS_TAN,
    Direction,
    classify,
    direction_distal_orthogonal,
    direction_initial,
    direction_max_search,
    morse_number,
)
from .oracle import (
    Biarc,
    CircularArc,
    Helix,
    StraightLine,
    continuous_critical_points,
    sample_to_model,
)
from .statics import ActuationCommand, solve_equilibrium


class InputError(ValueError):
    """Invalid file content or flag combination (exit code 1)."""


def _worker_count() -> int:
    env = os.environ.get("MORSECR_THREADS", "").strip()
    if env:
        try:
            count = int(env)
        except ValueError:
            raise InputError(f"MORSECR_THREADS: not an integer: {env!r}") from None
        if count < 1:
            raise InputError("MORSECR_THREADS: must be >= 1")
        return count
    return os.cpu_count() or 1


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: invalid JSON ({err})") from None


def _load_command(path: str) -> ActuationCommand:
    return ActuationCommand.from_dict(_load_json(path))


def _load_config(path: str, model: RobotModel) -> Configuration:
    doc = _load_json(path)
    if "theta" not in doc:
        raise InputError(f"{path}: missing key 'theta'")
    theta = Configuration(np.asarray(doc["theta"], dtype=np.float64))
    if theta.n_joints != model.n_joints:
        raise InputError(
            f"theta: {theta.n_joints} joints, model has {model.n_joints}"
        )
    return theta


def _parse_fixed_direction(text: str) -> Direction:
    payload = text.split(":", 1)[1]
    parts = payload.split(",")
    if len(parts) != 3:
        raise InputError(f"--direction: expected fixed:x,y,z, got {text!r}")
    try:
        x, y, z = (float(p) for p in parts)
    except ValueError:
        raise InputError(f"--direction: non-numeric component in {text!r}") from None
    return Direction.of(x, y, z)


def _resolve_direction(strategy, model, shape, eps_tan, eps_deg, n_samples):
    """Direction and descriptor result for a strategy name."""
    if strategy == "initial":
        v = direction_initial(model)
    elif strategy == "distal-orthogonal":
        v = direction_distal_orthogonal(shape, base_tangent=model.ref_tangents[0])
    elif strategy == "max":
        extras = (
            direction_initial(model),
            direction_distal_orthogonal(shape, base_tangent=model.ref_tangents[0]),
        )
        return direction_max_search(
            shape, n_samples=n_samples, eps_tan=eps_tan, eps_deg=eps_deg,
            extra_candidates=extras,
        )
    elif strategy.startswith("fixed:"):
        v = _parse_fixed_direction(strategy)
    else:
        raise InputError(
            f"--direction: unknown strategy {strategy!r} "
            "(expected initial|distal-orthogonal|max|fixed:x,y,z)"
        )
    return v, morse_number(shape, v, eps_tan=eps_tan, eps_deg=eps_deg)


def _write_text(path, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _descriptor_report(name, args, model, theta, equilibrium=None):
    shape = forward_kinematics(model, theta)
    direction, result = _resolve_direction(
        args.direction, model, shape, args.eps_tan, args.eps_deg, args.n_samples
    )
    report = {
        "command": name,
        "strategy": args.direction,
        "direction": direction.v.tolist(),
        "count": result.count,
        "label": classify(result),
        "critical_joints": list(result.critical_joints),
        "degenerate_flags": list(result.degenerate_flags),
        "generic": result.generic,
    }
    if equilibrium is not None:
        report["equilibrium"] = {
            "converged": equilibrium.converged,
            "iterations": equilibrium.iterations,
            "residual_inf": equilibrium.residual_norm,
        }
    return report


def _cmd_describe(args, name="describe") -> int:
    if bool(args.config) == bool(args.command):
        raise InputError("exactly one of --config or --command is required")
    model = load_model(args.model)
    equilibrium = None
    if args.config:
        theta = _load_config(args.config, model)
    else:
        command = _load_command(args.command)
        equilibrium = solve_equilibrium(
            model, command, tol=args.tol, max_iterations=args.max_iters,
            fd_step=args.fd_step,
        )
        theta = equilibrium.theta
    report = _descriptor_report(name, args, model, theta, equilibrium)
    _write_text(args.out, _serialize.dumps(report))
    return 2 if equilibrium is not None and not equilibrium.converged else 0


def _cmd_classify(args) -> int:
    return _cmd_describe(args, name="classify")


def _cmd_equilibrium(args) -> int:
    model = load_model(args.model)
    command = _load_command(args.command)
    theta_init = _load_config(args.theta_init, model) if args.theta_init else None
    report = solve_equilibrium(
        model, command, theta_init=theta_init, tol=args.tol,
        max_iterations=args.max_iters, fd_step=args.fd_step,
    )
    doc = {
        "command": "equilibrium",
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_inf": report.residual_norm,
        "theta": report.theta.joints.tolist(),
    }
    _write_text(args.out, _serialize.dumps(doc))
    return 0 if report.converged else 2


def _sweep_axes(spec: dict) -> list[np.ndarray]:
    grid = spec.get("grid")
    if not isinstance(grid, list) or not grid:
        raise InputError("sweep spec: 'grid' must be a non-empty list")
    axes = []
    for i, dim in enumerate(grid):
        for key in ("min", "max", "steps"):
            if key not in dim:
                raise InputError(f"sweep spec: grid[{i}].{key}: missing")
        steps = dim["steps"]
        if not isinstance(steps, int) or steps < 1:
            raise InputError(f"sweep spec: grid[{i}].steps: must be an integer >= 1")
        axes.append(np.linspace(float(dim["min"]), float(dim["max"]), steps))
    return axes


def _command_builder(spec: dict, model: RobotModel, n_dims: int):
    mode = spec.get("command")
    if mode == "tensions":
        n_tendons = len(model.actuators_of("tendon"))
        if n_dims != n_tendons:
            raise InputError(
                f"sweep spec: grid has {n_dims} dims, model has {n_tendons} tendons"
            )
        return lambda coords: ActuationCommand.tendon(coords)
    if mode == "field":
        if n_dims != 3:
            raise InputError("sweep spec: 'field' command needs a 3-dim grid")
        return lambda coords: ActuationCommand.magnet(coords)
    if mode == "field-polar":
        if n_dims != 2:
            raise InputError(
                "sweep spec: 'field-polar' needs a 2-dim grid (angle, magnitude)"
            )
        plane = np.asarray(
            spec.get("plane", [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]), dtype=np.float64
        )
        if plane.shape != (2, 3):
            raise InputError("sweep spec: 'plane' must be two 3-vectors")
        plane = plane / np.linalg.norm(plane, axis=1, keepdims=True)

        def build(coords):
            angle, magnitude = coords
            return ActuationCommand.magnet(
                magnitude * (np.cos(angle) * plane[0] + np.sin(angle) * plane[1])
            )

        return build
    if mode == "torques":
        if n_dims != 3 * model.n_joints:
            raise InputError(
                f"sweep spec: 'torques' needs a {3 * model.n_joints}-dim grid"
            )
        return lambda coords: ActuationCommand.direct(coords)
    raise InputError(
        f"sweep spec: command: unknown mode {mode!r} "
        "(expected tensions|field|field-polar|torques)"
    )


def _cmd_sweep(args) -> int:
    model = load_model(args.model)
    spec = _load_json(args.spec)
    axes = _sweep_axes(spec)
    build = _command_builder(spec, model, len(axes))
    strategy = args.direction or spec.get("direction", "initial")
    if strategy.startswith("fixed:"):
        _parse_fixed_direction(strategy)  # normalize/validate on parse

    shape_dims = tuple(len(ax) for ax in axes)
    n_rows_axis = int(np.prod(shape_dims[:-1], dtype=int)) if len(axes) > 1 else 1
    n_cols = shape_dims[-1]
    lead_shape = shape_dims[:-1]

    def coords_at(row: int, col: int) -> tuple[float, ...]:
        lead = np.unravel_index(row, lead_shape) if lead_shape else ()
        values = [axes[k][lead[k]] for k in range(len(lead))]
        values.append(axes[-1][col])
        return tuple(float(x) for x in values)

    def solve_point(coords, warm):
        command = build(np.asarray(coords))
        report = solve_equilibrium(
            model, command, theta_init=warm, tol=args.tol,
            max_iterations=args.max_iters, fd_step=args.fd_step,
        )
        return report

    def descriptor_cells(theta):
        shape = forward_kinematics(model, theta)
        direction, result = _resolve_direction(
            strategy, model, shape, args.eps_tan, args.eps_deg, args.n_samples
        )
        return (result.count, classify(result), *direction.v.tolist())

    # Continuation: the first column is chained down the rows, then each row
    # continues along its remaining columns; rows are independent after the
    # first column, so they can run on the worker pool without changing the
    # (deterministic) result.
    col0: list = [None] * n_rows_axis
    warm = model.theta_bar
    for row in range(n_rows_axis):
        report = solve_point(coords_at(row, 0), warm)
        col0[row] = report
        warm = report.theta

    def run_row(row: int):
        cells = []
        report = col0[row]
        coords = coords_at(row, 0)
        cells.append(
            (*coords, report.converged, *descriptor_cells(report.theta))
        )
        warm = report.theta
        for col in range(1, n_cols):
            coords = coords_at(row, col)
            report = solve_point(coords, warm)
            warm = report.theta
            cells.append(
                (*coords, report.converged, *descriptor_cells(report.theta))
            )
        return cells

    workers = min(_worker_count(), n_rows_axis)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_row = list(pool.map(run_row, range(n_rows_axis)))
    else:
        per_row = [run_row(row) for row in range(n_rows_axis)]

    header = [f"u_{k + 1}" for k in range(len(axes))]
    header += ["converged", "count", "label", "v_x", "v_y", "v_z"]
    rows = [cell for row_cells in per_row for cell in row_cells]
    _write_text(args.out, _serialize.csv_lines(header, rows))
    return 0


def _goal_direction(args, model: RobotModel) -> Direction:
    if args.direction == "initial":
        return direction_initial(model)
    if args.direction.startswith("fixed:"):
        return _parse_fixed_direction(args.direction)
    raise InputError(
        "--direction: control accepts 'initial' or 'fixed:x,y,z' "
        "(a goal direction must not depend on the unknown shape)"
    )


def _cmd_control(args) -> int:
    model = load_model(args.model)
    goal = MorphologyGoal(
        target_joint=args.target_joint,
        direction=_goal_direction(args, model),
        alpha=args.alpha,
        epsilon=args.eps,
    )
    goal.check_joint(model)
    u_init = _load_command(args.u_init)
    result = solve_morphology_control(
        model, goal, u_init, max_iterations=args.max_iters,
        gradient_step=args.gradient_step, multistart=args.multistart,
        seed=args.seed,
    )
    achieved = critical_joints_of(model, goal, result.theta_star)
    report = {
        "command": "control",
        "success": result.success,
        "message": result.message,
        "iterations": result.iterations,
        "objective": result.objective_value,
        "alignment_term": result.alignment_term,
        "barrier_term": result.barrier_term,
        "u_star": result.u_star.to_dict(),
        "theta_star": result.theta_star.joints.tolist(),
        "equilibrium": {
            "converged": result.equilibrium.converged,
            "iterations": result.equilibrium.iterations,
            "residual_inf": result.equilibrium.residual_norm,
        },
        "critical_joints": list(achieved),
        "target_critical": args.target_joint in achieved,
    }
    _write_text(args.out, _serialize.dumps(report))
    if args.out_command:
        _write_text(args.out_command, _serialize.dumps(result.u_star.to_dict()))
    return 0 if result.success else 2


def _build_curve(args):
    if args.curve == "straight":
        return StraightLine(length=args.length)
    if args.curve == "arc":
        return CircularArc(length=args.length, turning=args.turning)
    if args.curve == "biarc":
        return Biarc(length=args.length, turning_first=args.turning,
                     turning_second=args.turning2)
    if args.curve == "helix":
        return Helix(length=args.length, turns=args.turns, radius=args.radius)
    raise InputError(f"--curve: unknown kind {args.curve!r}")


def _cmd_oracle(args) -> int:
    curve = _build_curve(args)
    if args.direction == "initial":
        direction = Direction(curve.tangent(np.asarray(0.0)))
    elif args.direction.startswith("fixed:"):
        direction = _parse_fixed_direction(args.direction)
    else:
        raise InputError("--direction: oracle accepts 'initial' or 'fixed:x,y,z'")
    roots, second = continuous_critical_points(curve, direction, args.n_dense)
    degenerate = [bool(abs(g) <= 1e-9) for g in second]
    count = sum(1 for d in degenerate if not d)
    report = {
        "command": "oracle",
        "curve": args.curve,
        "direction": direction.v.tolist(),
        "continuous_count": count,
        "crossings": roots.tolist(),
        "degenerate_flags": degenerate,
    }
    if args.n_joints:
        robot, theta = sample_to_model(curve, args.n_joints)
        shape = forward_kinematics(robot, theta)
        result = morse_number(shape, direction, eps_tan=args.eps_tan,
                              eps_deg=args.eps_deg)
        report["discrete_count"] = result.count
        report["discrete_generic"] = result.generic
        report["agree"] = result.count == count
    _write_text(args.out, _serialize.dumps(report))
    return 0


def _add_shared_descriptor_flags(parser):
    parser.add_argument("--direction", default="initial",
                        help="initial|distal-orthogonal|max|fixed:x,y,z")
    parser.add_argument("--eps-tan", type=float, default=DEFAULT_EPS_TAN,
                        help="exact-zero band for tangent projections")
    parser.add_argument("--eps-deg", type=float, default=DEFAULT_EPS_DEG,
                        help="degeneracy bound on |v.k|*L")
    parser.add_argument("--n-samples", type=int, default=256,
                        help="hemisphere lattice size for --direction max")
    parser.add_argument("--out", default=None, help="output file (default stdout)")


def _add_solver_flags(parser):
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="equilibrium residual tolerance (infinity norm)")
    parser.add_argument("--max-iters", type=int, default=200)
    parser.add_argument("--fd-step", type=float, default=1e-6,
                        help="Jacobian finite-difference step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morsecr",
        description="Critical-point shape descriptors and morphology control "
                    "for discretized continuum robots",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name, fn in (("describe", _cmd_describe), ("classify", _cmd_classify)):
        p = sub.add_parser(name, help=f"{name} a configuration or solved command")
        p.add_argument("--model", required=True)
        p.add_argument("--config", default=None, help="configuration JSON file")
        p.add_argument("--command", default=None, help="actuation command JSON file")
        _add_shared_descriptor_flags(p)
        _add_solver_flags(p)
        p.set_defaults(handler=fn)

    p = sub.add_parser("equilibrium", help="solve the static force balance")
    p.add_argument("--model", required=True)
    p.add_argument("--command", required=True)
    p.add_argument("--theta-init", default=None)
    p.add_argument("--out", default=None)
    _add_solver_flags(p)
    p.set_defaults(handler=_cmd_equilibrium)

    p = sub.add_parser("sweep", help="grid sweep over actuation parameters")
    p.add_argument("--model", required=True)
    p.add_argument("--spec", required=True, help="sweep spec JSON file")
    p.add_argument("--direction", default=None,
                   help="override the spec's direction strategy")
    p.add_argument("--eps-tan", type=float, default=DEFAULT_EPS_TAN)
    p.add_argument("--eps-deg", type=float, default=DEFAULT_EPS_DEG)
    p.add_argument("--n-samples", type=int, default=256)
    p.add_argument("--out", default=None)
    _add_solver_flags(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("control", help="solve for actuation placing a critical "
                                       "point at a joint")
    p.add_argument("--model", required=True)
    p.add_argument("--target-joint", type=int, required=True)
    p.add_argument("--direction", required=True, help="initial|fixed:x,y,z")
    p.add_argument("--u-init", required=True, help="initial command JSON file")
    p.add_argument("--alpha", type=float, default=1e-4)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--multistart", type=int, default=5)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--gradient-step", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--out-command", default=None,
                   help="also write the solved command as a command file")
    p.set_defaults(handler=_cmd_control)

    p = sub.add_parser("oracle", help="analytic-curve critical points (debugging)")
    p.add_argument("--curve", required=True,
                   help="straight|arc|biarc|helix")
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--turning", type=float, default=2.0,
                   help="arc total turning / biarc first-half turning (rad)")
    p.add_argument("--turning2", type=float, default=-2.0,
                   help="biarc second-half turning (rad)")
    p.add_argument("--turns", type=float, default=2.5, help="helix turns")
    p.add_argument("--radius", type=float, default=0.05, help="helix radius")
    p.add_argument("--direction", default="initial")
    p.add_argument("--n-dense", type=int, default=10_000)
    p.add_argument("--n-joints", type=int, default=None,
                   help="also compare against the discretized model")
    p.add_argument("--eps-tan", type=float, default=DEFAULT_EPS_TAN)
    p.add_argument("--eps-deg", type=float, default=DEFAULT_EPS_DEG)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
