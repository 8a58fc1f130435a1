"""Command line front end: mesh export, h-sweeps, condition studies, probes.

All tabular output is UTF-8 CSV with a versioned first line and the fully
resolved run configuration in leading comment lines, so a result file is
reproducible from its own header. Sweep rows appear in specification
order (h outer, reduction middle, preconditioner variant inner) no matter
how the cells were computed.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from ._kernels import set_threads
from .errors import DimensionBudgetError
from .geometry import export_screen, make_screen
from .potentials_excitation import ProbeSet, default_probes, plane_wave, \
    scattered_field
from .solver import (AssemblyCache, CalderonPreconditioner, SolveConfig,
                     _block_diag_operator, effective_condition_number,
                     solve_dirichlet, solve_neumann)
from .spaces import ReductionStrategy, multitrace_space
from .assembly import assemble_duality, assemble_rhs

CSV_MAGIC = "# msbem-csv v1"
KAPPA_PRESETS = {"lf": 1.0 + 0.0j, "mf": 10.0 + 0.0j}
_KAPPA_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"(?:([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i)?$")


class UsageError(Exception):
    """Bad CLI input; the message names the offending field."""


def parse_kappa(text: str) -> complex:
    text = text.strip().lower()
    if text in KAPPA_PRESETS:
        return KAPPA_PRESETS[text]
    m = _KAPPA_RE.match(text)
    if not m:
        raise UsageError(
            f"kappa: cannot parse '{text}' (expected re[+imi] or a preset "
            f"{sorted(KAPPA_PRESETS)})")
    return complex(float(m.group(1)),
                   float(m.group(2)) if m.group(2) else 0.0)


def parse_h_list(text: str) -> tuple:
    try:
        hs = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"h_list: cannot parse '{text}'")
    if not hs:
        raise UsageError("h_list: needs at least one mesh width")
    if any(h <= 0 for h in hs):
        raise UsageError("h_list: mesh widths must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise UsageError("h_list: values must be strictly decreasing")
    return hs


def parse_reductions(text: str, side: float) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError("reductions: needs a nonempty list")
    out = []
    for p in parts:
        try:
            out.append(ReductionStrategy.parse(p, side=side))
        except Exception as e:
            raise UsageError(f"reductions: {e}")
    return tuple(out)


def parse_direction(text: str) -> tuple:
    try:
        d = np.array([float(p) for p in text.split(",")], dtype=np.float64)
    except ValueError:
        raise UsageError(f"direction: cannot parse '{text}'")
    if d.shape != (3,) or np.linalg.norm(d) == 0:
        raise UsageError("direction: needs three comma-separated "
                         "components, not all zero")
    d = d / np.linalg.norm(d)
    return tuple(d)


@dataclass
class SweepSpec:
    """One resolved sweep request."""

    problem: str
    kappa: complex
    geometry: str
    h_list: tuple
    reductions: tuple
    precondition: str = "both"          # on | off | both
    outer_tol: float = 2.0e-5
    inner_tol: float = 2.0e-12
    side: float = 1.0
    direction: tuple = (0.0, 0.0, 1.0)
    output: str = "-"
    with_cond: bool = False

    def __post_init__(self):
        if self.problem not in ("dirichlet", "neumann"):
            raise UsageError(f"problem: unknown '{self.problem}'")
        if self.precondition not in ("on", "off", "both"):
            raise UsageError("precondition: expected on, off or both")
        if not self.reductions:
            raise UsageError("reductions: needs a nonempty list")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise UsageError("h_list: values must be strictly decreasing")

    def variants(self) -> tuple:
        return {"on": (True,), "off": (False,),
                "both": (False, True)}[self.precondition]

    def config_lines(self) -> list:
        kv = {
            "problem": self.problem, "kappa": format_kappa(self.kappa),
            "geometry": self.geometry,
            "h_list": ",".join(f"{h:g}" for h in self.h_list),
            "reductions": ",".join(r.label() for r in self.reductions),
            "precondition": self.precondition,
            "outer_tol": f"{self.outer_tol:g}",
            "inner_tol": f"{self.inner_tol:g}",
            "side": f"{self.side:g}",
            "direction": ",".join(f"{c:g}" for c in self.direction),
            "with_cond": str(self.with_cond).lower(),
        }
        return [f"# config: {k}={v}" for k, v in kv.items()]


def format_kappa(kappa: complex) -> str:
    if kappa.imag == 0:
        return f"{kappa.real:g}"
    return f"{kappa.real:g}{kappa.imag:+g}i"


def _write_csv(path: str, lines: list) -> None:
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _solver_for(problem: str):
    return solve_dirichlet if problem == "dirichlet" else solve_neumann


def _cond_for(report, screen, reduction, cache: AssemblyCache,
              cfg: SolveConfig):
    """(cond, nullity) of the system the report solved, or None."""
    space, A = cache.system(screen, report.problem, report.kappa,
                            cfg.quadrature, reduction)
    P = None
    if report.preconditioned:
        dual = multitrace_space(screen, report.problem, "dual", reduction)
        blocks = [cache.precond_block(screen, dual, i, report.kappa,
                                      cfg.precond_quadrature)
                  for i in range(len(dual.blocks))]
        M = assemble_duality(dual, space)
        P = CalderonPreconditioner(_block_diag_operator(blocks), M, cfg)
    return effective_condition_number(A, P)


def _nullity_text(report, screen, reduction, cache: AssemblyCache,
                  cfg: SolveConfig) -> str:
    """Combinatorial nullity when the covering is exact; otherwise the
    numerical one within the dense budget, else blank."""
    if report.nullity_predicted is not None:
        return str(report.nullity_predicted)
    try:
        space, A = cache.system(screen, report.problem, report.kappa,
                                cfg.quadrature, reduction)
        _, nul = effective_condition_number(A)
        return str(nul)
    except DimensionBudgetError:
        return ""


def cmd_sweep(spec: SweepSpec) -> list:
    """Run the sweep and return the CSV lines (also written to output)."""
    cache = AssemblyCache()
    cfg = SolveConfig(outer_tol=spec.outer_tol, inner_tol=spec.inner_tol)
    solver = _solver_for(spec.problem)
    probes = None
    nprobe = 8
    header = ["problem", "kappa", "geometry", "reduction", "h", "ndof",
              "nullity", "precond", "outer_iters", "inner_iters_total",
              "final_residual", "cond_est"]
    rows = []
    for h in spec.h_list:
        screen = make_screen(spec.geometry, h, side=spec.side)
        for red in spec.reductions:
            nullity_txt = None
            for pre in spec.variants():
                rep = solver(screen, spec.kappa, red, precondition=pre,
                             cfg=cfg, direction=spec.direction, cache=cache)
                if probes is None:
                    probes = default_probes(rep.space)
                    nprobe = len(probes)
                vals = scattered_field(rep, probes=probes)
                if nullity_txt is None:
                    nullity_txt = _nullity_text(rep, screen, red, cache, cfg)
                cond_txt = ""
                if spec.with_cond:
                    try:
                        c, _ = _cond_for(rep, screen, red, cache, cfg)
                        cond_txt = f"{c:.9g}"
                    except DimensionBudgetError:
                        cond_txt = ""
                row = [spec.problem, format_kappa(spec.kappa),
                       spec.geometry, red.label(), f"{h:g}",
                       str(rep.ndof), nullity_txt,
                       "CP" if pre else "NP", str(rep.iterations),
                       str(rep.inner_iteration_total),
                       f"{rep.final_residual:.9e}", cond_txt]
                for v in vals:
                    row.append(f"{v.real:.12e}")
                    row.append(f"{v.imag:.12e}")
                rows.append(",".join(row))
        cache.clear()
    for i in range(1, nprobe + 1):
        header.append(f"probe_re_{i}")
        header.append(f"probe_im_{i}")
    lines = [CSV_MAGIC] + spec.config_lines() + [",".join(header)] + rows
    _write_csv(spec.output, lines)
    return lines


def cmd_cond(spec: SweepSpec, self_test: bool = False) -> list:
    """Effective condition numbers with and without preconditioning.

    Adds the predicted growth factor ((1+|log h|)/(1+|log h_prev|))^2
    between consecutive mesh widths for trend checking against the
    logarithmic bound.
    """
    cfg = SolveConfig(outer_tol=spec.outer_tol, inner_tol=spec.inner_tol)
    header = ["problem", "kappa", "geometry", "reduction", "h", "ndof",
              "cond_np", "cond_cp", "nullity", "growth_pred"]
    rows = []
    red = spec.reductions[0]
    cache = AssemblyCache()
    prev_h = None
    for h in spec.h_list:
        if self_test:
            n = max(4, int(round(2.0 / h)))
            c_np, nul = effective_condition_number(np.eye(n))
            c_cp = c_np
            ndof = n
        else:
            screen = make_screen(spec.geometry, h, side=spec.side)
            space, A = cache.system(screen, spec.problem, spec.kappa,
                                    cfg.quadrature, red)
            ndof = space.dimension
            c_np, nul = effective_condition_number(A)
            dual = multitrace_space(screen, spec.problem, "dual", red)
            blocks = [cache.precond_block(screen, dual, i, spec.kappa,
                                          cfg.precond_quadrature)
                      for i in range(len(dual.blocks))]
            M = assemble_duality(dual, space)
            P = CalderonPreconditioner(_block_diag_operator(blocks), M, cfg)
            c_cp, _ = effective_condition_number(A, P)
            cache.clear()
        if prev_h is None:
            pred = ""
        else:
            pred = f"{((1 + abs(np.log(h))) / (1 + abs(np.log(prev_h)))) ** 2:.9g}"
        rows.append(",".join([
            spec.problem, format_kappa(spec.kappa), spec.geometry,
            red.label(), f"{h:g}", str(ndof), f"{c_np:.9g}", f"{c_cp:.9g}",
            str(nul), pred]))
        prev_h = h
    lines = [CSV_MAGIC] + spec.config_lines() + [",".join(header)] + rows
    _write_csv(spec.output, lines)
    return lines


def cmd_mesh(geometry: str, h: float, outdir: str, side: float = 1.0) -> str:
    screen = make_screen(geometry, h, side=side)
    export_screen(screen, outdir)
    return os.path.join(outdir, "manifest.txt")


def cmd_probe(spec: SweepSpec, points: ProbeSet = None) -> list:
    """Scattered and incident field at probe points for one sweep cell."""
    cache = AssemblyCache()
    cfg = SolveConfig(outer_tol=spec.outer_tol, inner_tol=spec.inner_tol)
    screen = make_screen(spec.geometry, spec.h_list[0], side=spec.side)
    pre = spec.precondition != "off"
    rep = _solver_for(spec.problem)(
        screen, spec.kappa, spec.reductions[0], precondition=pre,
        cfg=cfg, direction=spec.direction, cache=cache)
    probes = points if points is not None else default_probes(rep.space)
    scat = scattered_field(rep, probes=probes)
    inc = plane_wave(spec.direction, spec.kappa, probes.points)
    header = ["x", "y", "z", "scattered_re", "scattered_im",
              "incident_re", "incident_im"]
    rows = []
    for p, s, u in zip(probes.points, scat, inc):
        rows.append(",".join([f"{p[0]:.12e}", f"{p[1]:.12e}",
                              f"{p[2]:.12e}", f"{s.real:.12e}",
                              f"{s.imag:.12e}", f"{u.real:.12e}",
                              f"{u.imag:.12e}"]))
    lines = [CSV_MAGIC] + spec.config_lines() + [",".join(header)] + rows
    _write_csv(spec.output, lines)
    return lines


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", default="dirichlet")
    p.add_argument("--kappa", default="lf",
                   help="re[+imi] or preset lf (1) / mf (10)")
    p.add_argument("--geometry", default="trijunction",
                   help="trijunction | mjunction:m | typeb")
    p.add_argument("--h", dest="h_list", default="0.25",
                   help="comma list, strictly decreasing")
    p.add_argument("--reductions", default="full",
                   help="comma list from full, partial, single-strip, "
                        "fixed-overlap[:delta]")
    p.add_argument("--precondition", default="both",
                   choices=("on", "off", "both"))
    p.add_argument("--tol", type=float, default=2.0e-5,
                   help="outer GMRES relative tolerance")
    p.add_argument("--inner-tol", type=float, default=2.0e-12,
                   help="Gram inner GMRES relative tolerance")
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--direction", default=None,
                   help="incident direction, normalized internally "
                        "(default 0,0,1; typeb defaults to 0,0,-1)")
    p.add_argument("--out", default="-", help="output CSV path or -")
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded bit-stable kernels")


def _spec_from(args) -> SweepSpec:
    side = float(args.side)
    geometry = args.geometry.strip().lower()
    if args.direction is not None:
        direction = parse_direction(args.direction)
    elif geometry == "typeb":
        direction = (0.0, 0.0, -1.0)
    else:
        direction = (0.0, 0.0, 1.0)
    return SweepSpec(
        problem=args.problem.strip().lower(),
        kappa=parse_kappa(args.kappa),
        geometry=geometry,
        h_list=parse_h_list(args.h_list),
        reductions=parse_reductions(args.reductions, side),
        precondition=args.precondition,
        outer_tol=args.tol, inner_tol=args.inner_tol, side=side,
        direction=direction, output=args.out,
        with_cond=getattr(args, "with_cond", False))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="msbem",
        description="Boundary element solver for scattering at junctions "
                    "of intersecting screens")
    sub = ap.add_subparsers(dest="verb", required=True)

    pm = sub.add_parser("mesh", help="emit panel meshes and a manifest")
    pm.add_argument("--geometry", default="trijunction")
    pm.add_argument("--h", type=float, default=0.5)
    pm.add_argument("--side", type=float, default=1.0)
    pm.add_argument("--out", required=True, help="output directory")

    ps = sub.add_parser("sweep", help="iteration counts over an h-sweep")
    _add_common(ps)
    ps.add_argument("--with-cond", action="store_true", dest="with_cond",
                    help="add effective condition numbers (dense, slow)")

    pc = sub.add_parser("cond", help="condition-number study over h")
    _add_common(pc)
    pc.add_argument("--self-test", action="store_true",
                    help="replace systems by identities (pipeline check)")

    pp = sub.add_parser("probe", help="field values at probe points")
    _add_common(pp)
    pp.add_argument("--points", default="",
                    help="semicolon-separated x,y,z triples; default cube")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_threads = os.environ.get("MSBEM_THREADS", "")
    if env_threads:
        try:
            set_threads(max(1, int(env_threads)))
        except ValueError:
            print("error: MSBEM_THREADS: expected an integer",
                  file=sys.stderr)
            return 2
    if getattr(args, "deterministic", False):
        set_threads(1)
    try:
        if args.verb == "mesh":
            path = cmd_mesh(args.geometry.strip().lower(), float(args.h),
                            args.out, side=float(args.side))
            print(f"wrote {path}")
            return 0
        spec = _spec_from(args)
        if args.verb == "sweep":
            cmd_sweep(spec)
        elif args.verb == "cond":
            cmd_cond(spec, self_test=args.self_test)
        elif args.verb == "probe":
            pts = None
            if args.points:
                try:
                    arr = np.array([[float(c) for c in trip.split(",")]
                                    for trip in args.points.split(";")
                                    if trip.strip()])
                except ValueError:
                    raise UsageError(f"points: cannot parse '{args.points}'")
                if arr.ndim != 2 or arr.shape[1] != 3:
                    raise UsageError("points: each entry needs exactly "
                                     "three comma-separated coordinates")
                pts = ProbeSet(arr)
            cmd_probe(spec, pts)
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, DimensionBudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
