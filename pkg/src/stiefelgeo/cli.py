"""Command-line interface: geodesic evaluation, logarithm, curvature tables,
normal forms, and the experiment harness.

Matrices travel as CSV files with 17 significant digits (exact round-trip
for doubles); scalar parameters accept literal pi multiples such as
"0.5pi".  Exit codes: 0 ok, 2 parse/usage error, 3 precondition violation,
4 ambiguity, 5 non-convergence.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments, frenet, stiefel
from .config import CONFIG_ENV_VAR, Config
from .errors import AmbiguityError, ConvergenceError, DomainError, StiefelGeoError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_AMBIGUITY = 4
EXIT_NO_CONVERGENCE = 5


def format_matrix_csv(m: np.ndarray) -> str:
    """One row per line, comma separated, 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "\n".join(",".join(f"{v:.17g}" for v in row) for row in m) + "\n"


def write_matrix_csv(path, m: np.ndarray) -> None:
    Path(path).write_text(format_matrix_csv(m), encoding="utf-8")


def read_matrix_csv(path) -> np.ndarray:
    """Parse a matrix CSV file; raises DomainError on malformed content."""
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: not a number row: {exc}") from exc
    if not rows:
        raise DomainError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=float)


def parse_pi_value(text: str) -> float:
    """Parse '0.5pi', 'pi', '-2pi' or a plain decimal."""
    raw = text.strip().lower().replace(" ", "")
    try:
        if raw.endswith("pi"):
            head = raw[:-2]
            if head in ("", "+"):
                return math.pi
            if head == "-":
                return -math.pi
            return float(head) * math.pi
        return float(raw)
    except ValueError as exc:
        raise DomainError(f"cannot parse parameter value {text!r}") from exc


def _load_config(config_path: str | None) -> Config:
    if config_path:
        return Config.from_json(config_path)
    return Config.from_env()


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_point_and_tangent(u_file, delta_file, cfg: Config):
    try:
        u_mat = read_matrix_csv(u_file)
        d_mat = read_matrix_csv(delta_file)
    except DomainError as exc:
        _fail(EXIT_PARSE, str(exc))
    try:
        point = stiefel.StiefelPoint(u_mat)
    except DomainError as exc:
        _fail(EXIT_PRECONDITION, f"point file {u_file}: {exc}")
    try:
        tangent = stiefel.TangentVector(point, d_mat)
    except DomainError as exc:
        residual = np.linalg.norm(u_mat.T @ d_mat + d_mat.T @ u_mat)
        _fail(EXIT_PRECONDITION,
              f"tangent file {delta_file}: {exc} (tangency residual {residual:.3e})")
    return point, tangent


def _emit(matrix: np.ndarray, output: str | None):
    text = format_matrix_csv(matrix)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help=f"JSON config file (default: ${CONFIG_ENV_VAR} if set).")
@click.pass_context
def main(ctx, config_path):
    """Stiefel-manifold geodesic toolkit (Euclidean metric)."""
    try:
        ctx.obj = _load_config(config_path)
    except (OSError, json.JSONDecodeError, DomainError) as exc:
        _fail(EXIT_PARSE, f"config: {exc}")


@main.command("exp")
@click.argument("u_file", type=click.Path(exists=True))
@click.argument("delta_file", type=click.Path(exists=True))
@click.option("-t", "--t", "t_text", default="1", show_default=True,
              help="Curve parameter; accepts pi literals like '0.5pi'.")
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the point here instead of stdout.")
@click.pass_obj
def cmd_exp(cfg: Config, u_file, delta_file, t_text, output):
    """Evaluate the geodesic from U with velocity DELTA at parameter t."""
    try:
        t = parse_pi_value(t_text)
    except DomainError as exc:
        _fail(EXIT_PARSE, str(exc))
    point, tangent = _read_point_and_tangent(u_file, delta_file, cfg)
    curve = stiefel.geodesic_curve(point, tangent)
    _emit(curve.trajectory(t)[0], output)


@main.command("log")
@click.argument("u_file", type=click.Path(exists=True))
@click.argument("v_file", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the tangent here instead of stdout.")
@click.option("--diagnostics", type=click.Path(), default=None,
              help="Write the diagnostic JSON here (always printed to stderr).")
@click.option("--starts", type=int, default=12, show_default=True,
              help="Extra perturbed starts used to detect ambiguity.")
@click.pass_obj
def cmd_log(cfg: Config, u_file, v_file, output, diagnostics, starts):
    """Riemannian logarithm: minimum-norm DELTA with Exp_U(DELTA) = V."""
    try:
        u_mat = read_matrix_csv(u_file)
        v_mat = read_matrix_csv(v_file)
    except DomainError as exc:
        _fail(EXIT_PARSE, str(exc))
    try:
        point = stiefel.StiefelPoint(u_mat)
        target = stiefel.StiefelPoint(v_mat)
    except DomainError as exc:
        _fail(EXIT_PRECONDITION, str(exc))

    result = stiefel.log_shoot(point, target, cfg=cfg,
                               extra_starts=starts, seed=cfg.seed)
    diag = {
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.converged,
        "ambiguous": result.ambiguous,
        "solutions": [
            {"norm": s.norm, "delta": s.delta.tolist()} for s in result.solutions
        ],
    }
    diag_text = json.dumps(diag, sort_keys=True, indent=2)
    if diagnostics:
        Path(diagnostics).write_text(diag_text, encoding="utf-8")
    click.echo(diag_text, err=True)

    if not result.converged:
        _fail(EXIT_NO_CONVERGENCE,
              f"no convergence (best residual {result.residual:.3e})")
    _emit(result.delta.delta, output)
    if result.ambiguous:
        click.echo("ambiguous: multiple equal-norm solutions found", err=True)
        sys.exit(EXIT_AMBIGUITY)


@main.command("frenet")
@click.argument("u_file", type=click.Path(exists=True))
@click.argument("delta_file", type=click.Path(exists=True))
@click.option("--order", "order", type=int, default=4, show_default=True,
              help="Number of derivative columns m; yields kappa_1..kappa_{m-1}.")
@click.option("--grid", "grid", type=int, default=50, show_default=True,
              help="Number of grid points.")
@click.option("--t-max", "t_max_text", default="2pi", show_default=True,
              help="Grid endpoint; accepts pi literals.")
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the CSV table here instead of stdout.")
@click.pass_obj
def cmd_frenet(cfg: Config, u_file, delta_file, order, grid, t_max_text, output):
    """Finite-difference curvature table along the geodesic, plus analytic values.

    The tangent is normalized to unit speed so curvatures are per unit arc
    length; the original speed is reported in the table.
    """
    try:
        t_max = parse_pi_value(t_max_text)
    except DomainError as exc:
        _fail(EXIT_PARSE, str(exc))
    point, tangent = _read_point_and_tangent(u_file, delta_file, cfg)
    if tangent.norm == 0:
        _fail(EXIT_PRECONDITION, "zero tangent has no curvature profile")
    unit = stiefel.TangentVector(point, tangent.delta / tangent.norm)
    curve = stiefel.geodesic_curve(point, unit)
    a, _, b = unit.split

    try:
        profile = frenet.curvature_profile(
            lambda t: curve.derivative(t, 0), np.linspace(0.0, t_max, grid), order)
        analytic = frenet.geodesic_frenet_curvatures(a, b, m=order)
    except StiefelGeoError as exc:
        _fail(EXIT_PRECONDITION, str(exc))

    lines = ["source,t,speed," + ",".join(f"kappa_{j}" for j in range(1, order))]
    for i, t in enumerate(profile.t):
        vals = ",".join("" if np.isnan(v) else f"{v:.17g}" for v in profile.kappas[i])
        lines.append(f"profile,{t:.17g},{tangent.norm:.17g},{vals}")
    pad = [""] * (order - 1 - len(analytic.curvatures))
    vals = ",".join([f"{v:.17g}" for v in analytic.curvatures] + pad)
    lines.append(f"analytic,,{tangent.norm:.17g},{vals}")
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("normal-form")
@click.argument("u_file", type=click.Path(exists=True))
@click.argument("delta_file", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the JSON here instead of stdout.")
@click.pass_obj
def cmd_normal_form(cfg: Config, u_file, delta_file, output):
    """Normal-form components (amplitude, frequency) and period of the geodesic."""
    point, tangent = _read_point_and_tangent(u_file, delta_file, cfg)
    a, _, b = tangent.split
    nf = frenet.normal_form(a, b, freq_tol=cfg.tol_freq)
    if len(nf.frequencies) == 0:
        period = "degenerate"
    else:
        found = frenet.minimal_period(nf, d_max=cfg.d_max, ratio_tol=cfg.tol_ratio)
        period = "not closed" if found is None else found
    payload = {
        "components": [[a_i, b_i] for a_i, b_i in nf.components],
        "dc_offset_norm": float(np.linalg.norm(nf.dc_offset)),
        "period": period,
        "speed": tangent.norm,
        "source_dim": nf.source_dim,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text)


@main.command("experiment")
@click.argument("name", type=click.Choice(experiments.EXPERIMENT_NAMES))
@click.option("--n", "n", type=int, default=None, help="Rows (default from config).")
@click.option("--p", "p", type=int, default=None, help="Columns (default from config).")
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=None, help="Seed (default from config).")
@click.option("--radii", default="0.25pi,0.5pi,0.75pi,0.9pi", show_default=True,
              help="Comma-separated probe radii (pi literals allowed).")
@click.option("--curvature-bound", "curv_bound", type=float, default=1.0,
              show_default=True, help="C for the klingenberg combination.")
@click.option("--loop-length", "loop_length_text", default="2pi", show_default=True,
              help="Shortest closed-geodesic length for klingenberg.")
@click.option("--out-dir", type=click.Path(), default=None,
              help="Report directory (default from config).")
@click.pass_obj
def cmd_experiment(cfg: Config, name, n, p, samples, seed, radii,
                   curv_bound, loop_length_text, out_dir):
    """Run one named experiment and write its JSON + CSV report."""
    n = n if n is not None else cfg.default_n
    p = p if p is not None else cfg.default_p
    seed = seed if seed is not None else cfg.seed
    out_dir = out_dir if out_dir is not None else cfg.output_dir

    try:
        if name == "curvature-bound":
            report = experiments.curvature_bound_experiment(n, p, samples, seed, cfg=cfg)
        elif name == "closed-geo-search":
            report = experiments.closed_geodesic_search(n, p, samples, seed, cfg=cfg)
        elif name == "injectivity-probe":
            radius_values = [parse_pi_value(tok) for tok in radii.split(",") if tok.strip()]
            report = experiments.injectivity_probe(n, p, radius_values, samples, seed, cfg=cfg)
        else:
            loop_length = parse_pi_value(loop_length_text)
            bound = experiments.klingenberg_bound(curv_bound, loop_length)
            report = experiments.ExperimentReport(
                name="klingenberg", n=n, p=p, seed=seed, samples=1, config=cfg.to_dict(),
                records=[{"curvature_bound": curv_bound, "loop_length": loop_length,
                          "bound": bound}],
                summary={"bound": bound},
                verdicts={"bound": {"pass": True, "value": bound, "tolerance": 0.0,
                                    "detail": f"min(pi/sqrt(C), l/2) = {bound:.17g}"}},
            )
            click.echo(f"{bound:.17g}")
    except DomainError as exc:
        _fail(EXIT_PRECONDITION, str(exc))

    json_path, csv_path = report.write(out_dir)
    click.echo(report.one_line())
    click.echo(f"wrote {json_path} and {csv_path}", err=True)
    if not report.passed:
        sys.exit(1)


if __name__ == "__main__":
    main()
