"""Command-line entry point: catalog, verify, mesh, arf, pfaffian.

Exit status is 0 on success, 1 when a verification fails and 2 on bad
arguments.  Data goes to stdout or --out files, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import arf as arfmod
from . import catalog as cat
from . import elliptic as ell
from .linalg import AmbiguousRankError, SkewnessError
from .omega import KernelConsistencyError, build_system, extract_K
from .spin import INF, is_inf

log = logging.getLogger("spinorsurf")


class UsageError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """'1.5', '-2i', '0.866+0.5i', '3-j', 'inf'."""
    t = text.strip().replace(" ", "").lower()
    if t in ("inf", "infinity", "oo"):
        return INF
    t = t.replace("i", "j")
    # a bare imaginary unit needs an explicit 1 for complex()
    t = re.sub(r"(^|[+-])j", r"\g<1>1j", t)
    try:
        return complex(t)
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r} as a complex number") from exc


def decimal_places(text: str) -> int | None:
    """Most digits after a decimal point among the numbers in ``text``; None if all are integers."""
    places = [len(m) for m in re.findall(r"\.(\d+)", text)]
    return max(places) if places else None


def parse_list(text: str, conv=float) -> list:
    items = [s for s in text.split(",") if s.strip()]
    try:
        return [conv(s) for s in items]
    except ValueError as exc:
        raise UsageError(f"cannot parse {text!r}") from exc


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        log.info("wrote %s", out)


def _load_spec(path: str) -> cat.SurfaceSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return cat.SurfaceSpec.from_json(data)
    except (cat.CatalogError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_catalog(args) -> int:
    if args.action == "list":
        for name, entry in cat.CATALOG.items():
            print(f"{name}\t{entry.description}")
        print("moebius-strip\tlimiting Moebius strip datum (pair only, not buildable as a spec)")
        return 0
    if args.name is None:
        raise UsageError("catalog build needs a surface name")
    name = args.name
    if name not in cat.CATALOG:
        raise UsageError(f"unknown surface {name!r}; try 'catalog list'")
    if name == "sphere-6" and args.sigma:
        vals = parse_list(args.sigma, parse_complex)
        if len(vals) not in (2, 3):
            raise UsageError("--sigma takes s1,s2 or s1,s2,s3")
        spec = cat.sphere_6_ends(*vals)
    elif name == "projective-plane-3" and args.c:
        vals = parse_list(args.c)
        if len(vals) == 2:
            vals.append(cat.solve_c3(*vals))
        if len(vals) != 3:
            raise UsageError("--c takes c1,c2 or c1,c2,c3")
        spec = cat.projective_plane_3_ends(*vals)
    elif name == "torus-4" and (args.tau or args.choice):
        tau = parse_complex(args.tau) if args.tau else complex(0.2, 1.1)
        choice = tuple(parse_list(args.choice, int)) if args.choice else (1, 2, 3)
        spec = cat.torus_4_ends(ell.make_context(ell.Lattice.from_tau(tau)), choice)
    else:
        for flag in ("sigma", "c", "tau", "choice"):
            if getattr(args, flag):
                raise UsageError(f"--{flag} does not apply to {name}")
        spec = cat.CATALOG[name].builder()
    _write(_dump_json(spec.to_json()), args.out)
    return 0


def cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    from .mesh import verify

    try:
        report = verify(spec)
    except (SkewnessError, AmbiguousRankError, KernelConsistencyError) as exc:
        log.error("verification aborted: %s", exc)
        return 1
    sys.stdout.write(report.to_tsv())
    if args.json:
        Path(args.json).write_text(_dump_json(report.to_json()))
    if args.plot:
        from .plotting import plot_report

        plot_report(report, args.plot)
    for r in report.failures():
        log.error("failed: %s = %.3e > %.1e %s", r.name, r.value, r.tol, r.detail)
    return 0 if report.passed else 1


def cmd_mesh(args) -> int:
    spec = _load_spec(args.spec)
    from .mesh import build_mesh, format_obj, verify

    if not args.no_check:
        report = verify(spec)
        if not report.passed:
            for r in report.failures():
                log.error("failed: %s = %.3e > %.1e", r.name, r.value, r.tol)
            return 1
    if args.res < 1:
        raise UsageError("--res must be positive")
    mesh = build_mesh(spec, args.res, args.cutoff, check=not args.no_check)
    _write(format_obj(mesh, f"{spec.name} res {args.res}"), args.out)
    st = mesh.stats
    print(f"# vertices\t{len(mesh.vertices)}", file=sys.stderr)
    print(f"# faces\t{len(mesh.faces)}", file=sys.stderr)
    print(f"# path_residual\t{st['path_residual']:.3e}\t(relative {st['path_residual_relative']:.3e})",
          file=sys.stderr)
    if "identification_residual" in st:
        print(f"# identification_residual\t{st['identification_residual']:.3e}", file=sys.stderr)
    if args.plot:
        from .plotting import plot_mesh

        plot_mesh(mesh, args.plot, spec.name)
    return 0


def cmd_arf(args) -> int:
    if args.genus < 1:
        raise UsageError("--genus must be at least 1")
    if args.table:
        if args.genus != 1:
            raise UsageError("--table is the genus-one table")
        print("structure\tq(0)\tq(a1)\tq(a2)\tq(a3)\tarf")
        for name, qs, a in arfmod.torus_table():
            print(name + "\t" + "\t".join(str(q) for q in qs) + f"\t{a:+d}")
        return 0
    curve = arfmod.HyperellipticCurve.standard(args.genus)
    try:
        spin = arfmod.parse_B(args.B or "", curve)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    value = arfmod.arf(spin)
    print(f"genus\t{args.genus}")
    print(f"B\t{','.join(str(b) for b in sorted(spin.B))}")
    if args.genus <= 3:
        # one line per homology class, named by its enclosed branch indices
        for cls in arfmod.all_classes(curve):
            label = ",".join(str(c) for c in sorted(cls.C)) or "-"
            print(f"q\t{label}\t{arfmod.q_value(spin, cls)}")
    print(f"arf\t{value:+d}")
    return 0


def cmd_pfaffian(args) -> int:
    ends = parse_list(args.ends, parse_complex)
    ctx = None
    if args.domain != "sphere":
        tau = parse_complex(args.tau) if args.tau else 1j
        ctx = ell.make_context(ell.Lattice.from_tau(tau))
        if any(is_inf(p) for p in ends):
            raise UsageError("infinity is not a point of a torus")
    try:
        system = build_system(args.domain, ends, ctx, args.paired)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if "W" in system.meta:
        d = complex(np.linalg.det(system.meta["W"]))
        print(f"det_W\t{d.real:.17g}\t{d.imag:.17g}")
    pf = system.pfaffian()
    print(f"pfaffian\t{pf.real:.17g}\t{pf.imag:.17g}")
    # ends typed to d decimals carry errors ~10^-d, so the rank cut follows the input precision
    rank_tol = args.rank_tol
    if rank_tol is None:
        d = decimal_places(args.ends)
        rank_tol = 1e-8 if d is None else min(1e-3, max(1e-8, 10.0 ** -d))
    print(f"rank_threshold\t{rank_tol:.1e}")
    try:
        K = extract_K(system, threshold_scale=rank_tol, tol=max(1e-9, rank_tol))
        print(f"kernel_dim\t{K.kernel_dim}")
        print(f"K_dim\t{K.dim}")
    except (AmbiguousRankError, KernelConsistencyError) as exc:
        log.error("kernel: %s", exc)
        return 1
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinorsurf", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", "-v", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", help="list or build catalog surfaces")
    c.add_argument("action", choices=["list", "build"])
    c.add_argument("name", nargs="?")
    c.add_argument("--tau", help="lattice ratio for torus-4, e.g. 0.2+1.1i")
    c.add_argument("--choice", help="permutation i,j,k for torus-4")
    c.add_argument("--sigma", help="s1,s2[,s3] for sphere-6 (s3 solved if omitted)")
    c.add_argument("--c", help="c1,c2[,c3] for projective-plane-3 (c3 solved if omitted)")
    c.add_argument("--out", help="output file (default stdout)")
    c.set_defaults(func=cmd_catalog)

    v = sub.add_parser("verify", help="check every defining condition of a spec")
    v.add_argument("spec")
    v.add_argument("--json", help="also write the report as JSON")
    v.add_argument("--plot", help="write a residual chart (png/pdf/svg)")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mesh", help="triangulate X = Re int omega and write OBJ")
    m.add_argument("spec")
    m.add_argument("--res", type=int, default=64)
    m.add_argument("--cutoff", type=float, default=None, help="distance kept from ends (default 5%% of domain)")
    m.add_argument("--out", help="OBJ file (default stdout)")
    m.add_argument("--plot", help="write a preview image")
    m.add_argument("--no-check", action="store_true", help="skip verification before meshing")
    m.set_defaults(func=cmd_mesh)

    a = sub.add_parser("arf", help="Arf invariant of a hyperelliptic spin structure")
    a.add_argument("--genus", type=int, required=True)
    a.add_argument("--B", default="", help="1-based branch indices, e.g. 1,3")
    a.add_argument("--table", action="store_true", help="print the genus-one table")
    a.set_defaults(func=cmd_arf)

    f = sub.add_parser("pfaffian", help="pfaffian and kernel dimension for an end set")
    f.add_argument("--ends", required=True, help="comma-separated, e.g. 0.866+0.5i,0.866-0.5i,0,inf")
    f.add_argument("--domain", required=True, help="sphere | torus-twisted | torus-untwisted:r")
    f.add_argument("--tau", help="lattice ratio for torus domains (default i)")
    f.add_argument("--paired", action="store_true", help="ends come in +-a pairs (untwisted only)")
    f.add_argument("--rank-tol", type=float, default=None,
                   help="relative singular-value cut (default from the decimals given in --ends)")
    f.set_defaults(func=cmd_pfaffian)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except cat.BranchConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (cat.CatalogError, ell.DegenerateLatticeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
