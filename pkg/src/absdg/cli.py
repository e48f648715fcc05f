"""Batch driver: run simulations, grid-convergence campaigns, field
comparison, and the stability scan.

Configuration is a flat key=value text file ('#' comments) plus command-line
overrides; every run key has a matching ``--key`` flag.  Exit codes: 0 on
success, 2 on configuration errors, 3 when the series solver fails to
converge within its term cap.
"""

import argparse
import sys
import time

import numpy as np

from . import fieldio, oracle
from .abs_time import run_abs, total_series_terms
from .dg_space import (
    DGField,
    PointLocator,
    RULE_NAMES,
    SpatialContext,
    l2_error,
    project_initial_condition,
)
from .kernels import backend_name
from .lee_core import COMPONENT_NAMES, MeanFlow, max_wave_speed
from .mesh import (
    TAG_NAMES,
    compute_geometry,
    load_mesh,
    save_mesh,
    structured_square_mesh,
)
from .rk_time import RKConfig, STAGE_COUNT, count_steps, run_rk

SCHEMES = ("abs", "rk2", "rk4")
ALPHA_MODES = ("lf", "spectral")


class ConfigError(ValueError):
    """Bad run configuration; maps to exit code 2."""


class NonConvergenceError(RuntimeError):
    """Series solver hit its term cap; maps to exit code 3."""


_CONFIG_SPEC = {
    # key: (type, default)
    "mesh": (str, None),
    "scheme": (str, "abs"),
    "order": (int, 1),
    "m1": (float, 0.0),
    "m2": (float, 0.0),
    "dt": (float, 0.5),
    "t_final": (float, 3.0),
    "tol": (float, 1e-8),
    "n_max": (int, 200),
    "alpha_mode": (str, "lf"),
    "alpha": (float, None),
    "ic": (str, "pulse"),
    "ic_alpha1": (float, 1.0),
    "ic_eps1": (float, 1e-5),
    "ic_rho_mode": (str, "pressure"),
    "ic_file": (str, None),
    "out": (str, "run"),
    "vtk": (bool, False),
    "error": (str, "exact"),
    "freeze": (bool, False),
}


def _parse_bool(text):
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got '{text}'")


class RunConfig:
    """Validated run configuration with boundary-rule overrides."""

    def __init__(self, values=None, bc=None):
        for key, (_, default) in _CONFIG_SPEC.items():
            setattr(self, key, default)
        self.bc = {}
        self.explicit = set()
        if values:
            for key, val in values.items():
                self.set(key, val)
        if bc:
            for tag, rule in bc.items():
                self.set_bc(tag, rule)

    def set(self, key, value):
        if key.startswith("bc."):
            self.set_bc(key[3:], value)
            return
        if key not in _CONFIG_SPEC:
            raise ConfigError(f"unknown configuration key '{key}'")
        typ, _ = _CONFIG_SPEC[key]
        self.explicit.add(key)
        if value is None or (isinstance(value, str) and value.lower() == "none"):
            setattr(self, key, None)
            return
        try:
            if typ is bool and isinstance(value, str):
                value = _parse_bool(value.lower())
            else:
                value = typ(value)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value '{value}' for key '{key}'")
        setattr(self, key, value)

    def set_bc(self, tag, rule):
        if tag not in TAG_NAMES:
            raise ConfigError(f"unknown boundary tag '{tag}' in bc override")
        if rule not in RULE_NAMES:
            raise ConfigError(f"unknown boundary rule '{rule}' in bc override")
        self.bc[tag] = rule

    def copy(self):
        dup = RunConfig()
        dup.__dict__.update({k: v for k, v in self.__dict__.items()
                             if k not in ("bc", "explicit")})
        dup.bc = dict(self.bc)
        dup.explicit = set(self.explicit)
        return dup

    def validate(self, need_mesh=True):
        if need_mesh and not self.mesh:
            raise ConfigError("no mesh file configured (key 'mesh')")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.order not in (0, 1, 2):
            raise ConfigError("order must be 0, 1, or 2")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_final < 0:
            raise ConfigError("t_final must be non-negative")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.n_max < 1:
            raise ConfigError("n_max must be at least 1")
        if self.alpha_mode not in ALPHA_MODES:
            raise ConfigError(f"alpha_mode must be one of {ALPHA_MODES}")
        if self.ic not in ("pulse", "file"):
            raise ConfigError("ic must be 'pulse' or 'file'")
        if self.ic == "file" and not self.ic_file:
            raise ConfigError("ic=file requires ic_file")
        if self.ic_rho_mode not in ("pressure", "zero"):
            raise ConfigError("ic_rho_mode must be 'pressure' or 'zero'")
        if self.error not in ("exact", "none"):
            raise ConfigError("error must be 'exact' or 'none'")
        return self


def load_config(path):
    """Parse a flat key=value configuration file."""
    cfg = RunConfig()
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            cfg.set(key.strip(), value.strip())
    return cfg


def resolve_alpha(config, geom, mean):
    """Jump-dissipation coefficient for a run: an explicit value wins;
    otherwise 'lf' couples to the step as h/(2 dt) while 'spectral' uses the
    wave-speed bound |M| + 1."""
    if config.alpha is not None:
        return float(config.alpha)
    if config.alpha_mode == "spectral":
        return max_wave_speed(mean)
    return geom.characteristic_edge() / (2.0 * config.dt)


def _initial_field(config, mesh, ctx):
    if config.ic == "pulse":
        params = oracle.PulseParams(config.ic_alpha1, config.ic_eps1, config.m1)
        fn = oracle.pulse_initial_condition(params, rho_mode=config.ic_rho_mode)
        return project_initial_condition(fn, mesh, ctx.basis, ctx.geom)
    mesh_path, order, coeffs = fieldio.read_coeffs_sidecar(config.ic_file)
    if order != config.order:
        raise ConfigError(
            f"ic_file order {order} does not match configured order {config.order}"
        )
    if coeffs.shape[0] != mesh.n_cells:
        raise ConfigError("ic_file cell count does not match the mesh")
    return DGField(order, coeffs, mesh)


def execute_run(config, mesh=None, ctx=None):
    """Run one simulation; returns a result dict (no files written)."""
    config.validate()
    mesh = mesh if mesh is not None else load_mesh(config.mesh)
    mean = MeanFlow(config.m1, config.m2)
    if ctx is None:
        geom = compute_geometry(mesh)
        alpha = resolve_alpha(config, geom, mean)
        ctx = SpatialContext(
            mesh, config.order, mean, alpha, bc_rules=config.bc, geom=geom
        )
    q0 = _initial_field(config, mesh, ctx)

    t0 = time.perf_counter()
    reports = []
    if config.t_final == 0.0:
        q = q0
        iterations = 0
    elif config.scheme == "abs":
        q, reports = run_abs(
            q0, config.t_final, config.dt, config.tol, config.n_max, ctx,
            freeze_cells=config.freeze,
        )
        iterations = total_series_terms(reports)
    else:
        rkcfg = RKConfig(config.scheme, config.dt, config.t_final)
        q = run_rk(q0, rkcfg, ctx)
        iterations = count_steps(config.t_final, config.dt) * STAGE_COUNT[config.scheme]
    wall = time.perf_counter() - t0

    error = None
    if config.error == "exact" and config.ic == "pulse" and config.m2 == 0.0:
        params = oracle.PulseParams(config.ic_alpha1, config.ic_eps1, config.m1)

        def ref(x, y):
            return oracle.exact_pressure(x, y, config.t_final, params)

        error = l2_error(q, ref, ctx, component="p")

    return {
        "config": config,
        "mesh": mesh,
        "ctx": ctx,
        "field": q,
        "reports": reports,
        "iterations": iterations,
        "steps": count_steps(config.t_final, config.dt) if config.t_final > 0 else 0,
        "wall_time": wall,
        "error": error,
        "converged": all(r.converged for r in reports),
        "alpha": ctx.alpha,
    }


def write_run_outputs(result, prefix):
    config = result["config"]
    mesh, ctx, q = result["mesh"], result["ctx"], result["field"]
    centroids = ctx.geom.cell_centroid
    values = q.centroid_values(ctx.basis, ctx.geom)
    fieldio.write_field_csv(
        f"{prefix}.csv", np.arange(mesh.n_cells), centroids, values
    )
    fieldio.write_coeffs_sidecar(f"{prefix}_coeffs.csv", q, config.mesh or "")
    if config.vtk:
        data = {name: values[:, k] for k, name in enumerate(COMPONENT_NAMES)}
        fieldio.write_vtk(f"{prefix}.vtk", mesh, data)
    lines = [
        f"scheme {config.scheme}",
        f"order {config.order}",
        f"backend {backend_name(ctx.kernel)}",
        f"alpha {result['alpha']:.17g}",
        f"steps {result['steps']}",
        f"iterations {result['iterations']}",
        f"converged {result['converged']}",
        f"wall_time_s {result['wall_time']:.3f}",
    ]
    if result["reports"]:
        per_step = ",".join(str(r.iterations) for r in result["reports"])
        lines.append(f"series_terms_per_step {per_step}")
    if result["error"] is not None:
        lines.append(f"relative_l2_error_p {result['error']:.17g}")
    with open(f"{prefix}_report.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return lines


def cmd_run(args):
    config = _config_from_args(args)
    result = execute_run(config)
    lines = write_run_outputs(result, config.out)
    print("\n".join(lines))
    if not result["converged"]:
        print("warning: series did not converge within n_max", file=sys.stderr)
        return 3
    return 0


def fit_slope(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(hs[keep]), np.log(errors[keep]), 1)[0])


def convergence_study(config, mesh_paths, orders, sanity=False):
    """Run each (mesh, order) pair and fit per-order slopes.

    Returns {'rows': [(order, h, error)], 'slopes': {order: slope}}.
    A failing run aborts only its own row.
    """
    if len(mesh_paths) < 3:
        raise ConfigError("convergence study needs at least 3 meshes")
    rows = []
    for order in orders:
        for path in mesh_paths:
            run_cfg = config.copy()
            run_cfg.mesh = path
            run_cfg.order = order
            try:
                mesh = load_mesh(path)
                geom = compute_geometry(mesh)
                h = geom.characteristic_edge()
                if sanity:
                    mean = MeanFlow(run_cfg.m1, run_cfg.m2)
                    ctx = SpatialContext(
                        mesh, order, mean, 0.0, bc_rules=run_cfg.bc, geom=geom
                    )
                    q0 = _initial_field(run_cfg, mesh, ctx)

                    pts = ctx.basis.proj_points
                    phi = ctx.basis.eval(pts)
                    vals = np.einsum("qm,cmk->cqk", phi, q0.coeffs)

                    def self_ref(x, y, _v=vals):
                        return _v

                    err = l2_error(q0, self_ref, ctx)
                else:
                    result = execute_run(run_cfg, mesh=mesh)
                    err = result["error"]
                rows.append((order, h, err if err is not None else float("nan")))
            except (ConfigError, ValueError) as exc:
                print(f"row (order={order}, mesh={path}) failed: {exc}", file=sys.stderr)
                rows.append((order, float("nan"), float("nan")))
    slopes = {}
    for order in orders:
        hs = [h for o, h, e in rows if o == order]
        errs = [e for o, h, e in rows if o == order]
        slopes[order] = fit_slope(hs, errs)
    return {"rows": rows, "slopes": slopes}


def cmd_converge(args):
    config = _config_from_args(args, need_mesh=False)
    if "t_final" not in config.explicit:
        config.t_final = 2.0  # grid-convergence campaigns stop early

    mesh_paths = list(args.meshes or [])
    if args.gen_h:
        for h in args.gen_h:
            n = max(2, int(round(2.0 * args.gen_half / h)))
            mesh = structured_square_mesh(n, half_extent=args.gen_half, tag=args.gen_tag)
            path = f"{config.out}_mesh_h{h:g}.msh"
            save_mesh(mesh, path)
            mesh_paths.append(path)
    report = convergence_study(config, mesh_paths, args.orders, sanity=args.sanity)

    table_path = f"{config.out}_convergence.csv"
    with open(table_path, "w") as fh:
        fh.write("order,h,error,log10_h,log10_error\n")
        for order, h, err in report["rows"]:
            lh = np.log10(h) if h > 0 else float("nan")
            le = np.log10(err) if err and err > 0 else float("nan")
            fh.write(f"{order},{h:.17g},{err:.17g},{lh:.17g},{le:.17g}\n")
    with open(f"{config.out}_slopes.csv", "w") as fh:
        fh.write("order,slope\n")
        for order, slope in report["slopes"].items():
            fh.write(f"{order},{slope:.17g}\n")

    for order, h, err in report["rows"]:
        print(f"order {order}  h {h:.4g}  error {err:.6g}")
    for order, slope in report["slopes"].items():
        print(f"order {order}  slope {slope:.4g}")
    return 0


def _load_field(coeffs_path, mesh_override=None):
    mesh_path, order, coeffs = fieldio.read_coeffs_sidecar(coeffs_path)
    mesh_path = mesh_override or mesh_path
    if not mesh_path:
        raise ConfigError(f"{coeffs_path}: sidecar has no mesh path; pass --mesh-a/--mesh-b")
    mesh = load_mesh(mesh_path)
    if coeffs.shape[0] != mesh.n_cells:
        raise ConfigError(f"{coeffs_path}: mesh mismatch (cell counts differ)")
    return DGField(order, coeffs, mesh)


def compare_fields(field_a, field_b=None, reference=None, component="p"):
    """Relative L2 difference of field_a against field_b or a pointwise
    reference, with quadrature on field_a's mesh.

    Cross-mesh comparison evaluates field_b at field_a's quadrature points
    by point location in field_b's mesh.
    """
    ctx = SpatialContext(field_a.mesh, field_a.order, MeanFlow(0, 0), 0.0)
    if reference is not None:
        return l2_error(field_a, reference, ctx, component=component)
    same_mesh = (
        field_b.mesh.n_cells == field_a.mesh.n_cells
        and np.array_equal(field_b.mesh.nodes, field_a.mesh.nodes)
        and np.array_equal(field_b.mesh.triangles, field_a.mesh.triangles)
    )
    if same_mesh:
        basis_b = SpatialContext(field_a.mesh, field_b.order, MeanFlow(0, 0), 0.0).basis
        pts = ctx.basis.proj_points
        phi_b = basis_b.eval(pts)

        def ref(x, y, _phi=phi_b, _c=field_b.coeffs):
            return np.einsum("qm,cmk->cqk", _phi, _c)

        return l2_error(field_a, ref, ctx, component=component)

    locator = PointLocator(field_b.mesh)
    basis_b = SpatialContext(field_b.mesh, field_b.order, MeanFlow(0, 0), 0.0).basis
    pts = ctx.basis.proj_points
    phys = ctx.cell_points(pts)
    flat = phys.reshape(-1, 2)
    vals_b = locator.evaluate(field_b, basis_b, flat).reshape(phys.shape[:2] + (4,))

    def ref(x, y, _v=vals_b):
        return _v

    return l2_error(field_a, ref, ctx, component=component)


def cmd_compare(args):
    field_a = _load_field(args.field_a, args.mesh_a)
    if args.oracle_t is not None:
        params = oracle.PulseParams(args.ic_alpha1, args.ic_eps1, args.m1)

        def ref(x, y):
            return oracle.exact_pressure(x, y, args.oracle_t, params)

        err = compare_fields(field_a, reference=ref, component=args.component)
    elif args.field_b:
        field_b = _load_field(args.field_b, args.mesh_b)
        err = compare_fields(field_a, field_b, component=args.component)
    else:
        raise ConfigError("compare needs --field-b or --oracle-t")
    print(f"relative_l2_error {err:.17g}")
    return 0


def cmd_stability(args):
    r_grid = np.linspace(args.r_min, args.r_max, args.r_count)
    theta_grid = np.linspace(0.0, 2.0 * np.pi, args.theta_count)
    scan = oracle.empirical_stability_scan(
        args.n_max, r_grid, theta_grid, csv_path=f"{args.out}_stability.csv"
    )
    with open(f"{args.out}_hcurve.csv", "w") as fh:
        fh.write("theta,H\n")
        for tb, hv in zip(scan.h_theta, scan.h_values):
            fh.write(f"{tb:.17g},{hv:.17g}\n")
    for n, r in scan.r_star.items():
        bound = (n + 1) / np.sqrt(2.0)
        print(f"n {n}  largest stable r {r:.4f}  (proved bound {bound:.4f})")
    return 0


def _add_config_flags(parser, need_mesh=True):
    parser.add_argument("--config", help="key=value configuration file")
    for key, (typ, _) in _CONFIG_SPEC.items():
        flag = "--" + key.replace("_", "-")
        if typ is bool:
            parser.add_argument(flag, dest=key, default=None, choices=["0", "1"])
        else:
            parser.add_argument(flag, dest=key, default=None)
    parser.add_argument(
        "--bc",
        action="append",
        default=[],
        metavar="TAG=RULE",
        help="boundary rule override, e.g. --bc free=wall",
    )


def _config_from_args(args, need_mesh=True):
    config = load_config(args.config) if args.config else RunConfig()
    for key in _CONFIG_SPEC:
        val = getattr(args, key, None)
        if val is not None:
            config.set(key, val)
    for item in args.bc:
        tag, _, rule = item.partition("=")
        config.set_bc(tag.strip(), rule.strip())
    return config.validate(need_mesh=need_mesh)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="absdg",
        description="Series-in-time / Runge-Kutta DG solver for the 2D "
        "linearized Euler equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation")
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("converge", help="grid-convergence campaign")
    _add_config_flags(p_conv, need_mesh=False)
    p_conv.add_argument("--meshes", nargs="*", help="mesh files (at least 3)")
    p_conv.add_argument(
        "--gen-h", nargs="*", type=float, help="generate structured meshes at these edge sizes"
    )
    p_conv.add_argument("--gen-half", type=float, default=4.0)
    p_conv.add_argument("--gen-tag", default="free")
    p_conv.add_argument("--orders", nargs="*", type=int, default=[0, 1, 2])
    p_conv.add_argument("--sanity", action="store_true",
                        help="compare the projected IC against itself (expect 0)")
    p_conv.set_defaults(func=cmd_converge)

    p_cmp = sub.add_parser("compare", help="relative L2 distance of two fields")
    p_cmp.add_argument("--field-a", required=True, help="modal sidecar CSV")
    p_cmp.add_argument("--field-b", help="modal sidecar CSV")
    p_cmp.add_argument("--mesh-a")
    p_cmp.add_argument("--mesh-b")
    p_cmp.add_argument("--oracle-t", type=float, help="compare against the exact pulse at this time")
    p_cmp.add_argument("--m1", type=float, default=0.0)
    p_cmp.add_argument("--ic-alpha1", type=float, default=1.0)
    p_cmp.add_argument("--ic-eps1", type=float, default=1e-5)
    p_cmp.add_argument("--component", default="p", choices=list(COMPONENT_NAMES))
    p_cmp.set_defaults(func=cmd_compare)

    p_stab = sub.add_parser("stability", help="amplification-factor scan")
    p_stab.add_argument("--n-max", type=int, default=5)
    p_stab.add_argument("--r-min", type=float, default=0.05)
    p_stab.add_argument("--r-max", type=float, default=5.0)
    p_stab.add_argument("--r-count", type=int, default=100)
    p_stab.add_argument("--theta-count", type=int, default=2001)
    p_stab.add_argument("--out", default="scan")
    p_stab.set_defaults(func=cmd_stability)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
