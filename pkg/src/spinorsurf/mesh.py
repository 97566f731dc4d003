"""Verification reports and triangle meshes of X = Re int omega for catalog surfaces."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import SurfaceSpec, unbranched_scan
from .omega import constant_terms
from .spin import (
    LaurentError,
    end_check,
    is_inf,
    nonorientable_compatibility,
    periods,
    quadric_form,
    sample_points,
    segment_integrals,
)

log = logging.getLogger(__name__)

TOLERANCES = {
    "skewness": 1e-10,
    "pfaffian": 1e-8,
    "kernel": 1e-8,
    "constant_term": 1e-8,
    "end": 1e-9,
    "period": 1e-8,
    "compatibility": 1e-9,
    "null_quadric": 1e-10,
}


class UnverifiedSpecError(ValueError):
    pass


# ---------------------------------------------------------------------------
# verification


@dataclass
class Residual:
    name: str
    value: float
    tol: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tol


@dataclass
class VerificationReport:
    spec_name: str
    residuals: list[Residual] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.residuals)

    def add(self, name: str, value: float, tol: float, detail: str = "") -> None:
        self.residuals.append(Residual(name, float(value), float(tol), detail))

    def failures(self) -> list[Residual]:
        return [r for r in self.residuals if not r.ok]

    def to_tsv(self) -> str:
        lines = ["check\tresidual\ttolerance\tstatus\tdetail"]
        for r in self.residuals:
            lines.append(f"{r.name}\t{r.value:.3e}\t{r.tol:.1e}\t{'pass' if r.ok else 'FAIL'}\t{r.detail}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "spec": self.spec_name,
            "pass": self.passed,
            "residuals": [{"name": r.name, "value": r.value if np.isfinite(r.value) else None,
                           "tol": r.tol, "pass": r.ok, "detail": r.detail} for r in self.residuals],
        }


def _fmt_point(p) -> str:
    return "inf" if is_inf(p) else f"{complex(p):.6g}"


def verify(spec: SurfaceSpec, scan_grid: int = 48) -> VerificationReport:
    """Every defining condition of the surface, one residual per check."""
    rep = VerificationReport(spec.name)
    system = spec.system
    M = system.matrix
    scale = max(float(system.meta.get("scale", 0.0)), float(np.max(np.abs(M))) if M.size else 0.0, 1e-300)
    rep.add("skewness", np.max(np.abs(M + M.T)) / scale if M.size else 0.0, TOLERANCES["skewness"])
    n = M.shape[0]
    try:
        pf = abs(system.pfaffian())
        rep.add("pfaffian", pf / scale ** (n / 2) if n % 2 == 0 else 0.0, TOLERANCES["pfaffian"])
    except ValueError as exc:
        rep.add("pfaffian", math.inf, TOLERANCES["pfaffian"], str(exc))

    C = np.stack([spec.coeffs1, spec.coeffs2], axis=1)
    for k, label in enumerate(("s1", "s2")):
        c = C[:, k]
        rep.add(f"kernel[{label}]", np.linalg.norm(M @ c) / (scale * max(np.linalg.norm(c), 1e-300)),
                TOLERANCES["kernel"])
    try:
        ct = constant_terms(system, C)
        rep.add("constant_term", float(np.max(ct)), TOLERANCES["constant_term"])
    except LaurentError as exc:
        rep.add("constant_term", math.inf, TOLERANCES["constant_term"], str(exc))

    pair = spec.pair
    for p in spec.ends:
        try:
            er = end_check(pair, p, tol=TOLERANCES["end"])
            # pass/fail is the end test itself; the residue size goes in the detail column
            val = 0.0 if er.embedded_planar else 1.0
            rep.add(f"end[{_fmt_point(p)}]", val, TOLERANCES["end"],
                    f"ord {er.ord}, |residue| {float(np.max(np.abs(er.residue_vector))):.2e}")
        except LaurentError as exc:
            rep.add(f"end[{_fmt_point(p)}]", math.inf, TOLERANCES["end"], str(exc))

    for cyc in spec.cycles:
        try:
            pr = periods(pair, cyc, tol=TOLERANCES["period"])
            rep.add(f"period[{cyc.label}]", max(pr.conj_residual, pr.real_residual), TOLERANCES["period"])
        except RuntimeError as exc:
            rep.add(f"period[{cyc.label}]", math.inf, TOLERANCES["period"], str(exc))

    inv = spec.involution_map()
    if inv is not None:
        cr = nonorientable_compatibility(pair, inv, tol=TOLERANCES["compatibility"])
        rep.add("compatibility", cr.residual, TOLERANCES["compatibility"], f"sign {cr.sign:+d}")

    scan = unbranched_scan(pair, grid=scan_grid)
    detail = f"zeros {scan.found_zero_count}/{scan.expected_zero_count}"
    bad = len(scan.candidates) + len(scan.unresolved) + (0 if scan.complete else 1)
    rep.add("branch_points", float(bad), 0.0, detail)

    rng = np.random.default_rng(5)
    u = sample_points(spec.frame, 64, list(spec.ends), rng)
    w = pair.omega(u)
    q = np.abs(quadric_form(w)) / np.maximum(np.sum(np.abs(w) ** 2, axis=0), 1e-300)
    rep.add("null_quadric", float(np.max(q)), TOLERANCES["null_quadric"])
    return rep


# ---------------------------------------------------------------------------
# meshes


@dataclass
class Mesh:
    vertices: np.ndarray  # (k, 3) float
    faces: np.ndarray  # (m, 3) int, 0-based
    boundary_tags: np.ndarray  # (k,) bool: vertex lies next to an excluded end region
    params: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        self.boundary_tags = np.asarray(self.boundary_tags, dtype=bool).reshape(-1)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("mesh has non-finite vertices")

    def interior_edge_counts(self) -> dict:
        counts: dict = {}
        for f in self.faces:
            for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        return counts


@dataclass
class _Grid:
    points: np.ndarray  # (ny, nx) complex parameter values
    step_x: complex
    step_y: complex
    periodic: bool


def _sphere_grid(spec: SurfaceSpec, res: int) -> tuple[_Grid, float]:
    finite = [abs(complex(p)) for p in spec.ends if not is_inf(p)]
    R = 1.5 * max(max(finite, default=1.0), 1.0)
    t = np.linspace(-R, R, res + 1)
    P = t[None, :] + 1j * t[:, None]
    h = t[1] - t[0]
    return _Grid(P, complex(h), complex(1j * h), False), 2 * math.sqrt(2) * R


def _torus_grid(spec: SurfaceSpec, res: int) -> tuple[_Grid, float]:
    ctx = spec.frame.ctx
    w1, w3 = complex(ctx.omega1), complex(ctx.omega3)
    k = (np.arange(res) + 0.5) / res
    P = -w1 - w3 + 2 * w1 * k[None, :] + 2 * w3 * k[:, None]
    diam = max(abs(2 * w1 + 2 * w3), abs(2 * w1 - 2 * w3))
    return _Grid(P, 2 * w1 / res, 2 * w3 / res, True), diam


def _segment_end_distance(a: np.ndarray, d: np.ndarray, p: complex) -> np.ndarray:
    t = np.clip(((p - a) * np.conj(d)).real / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
    return np.abs(a + t * d - p)


def _end_images(spec: SurfaceSpec) -> list[complex]:
    """Finite ends, with torus ends repeated over neighbouring cells."""
    pts = [complex(p) for p in spec.ends if not is_inf(p)]
    if not spec.frame.is_torus:
        return pts
    ctx = spec.frame.ctx
    w1, w3 = complex(ctx.omega1), complex(ctx.omega3)
    out = []
    for p in pts:
        for m in (-2, -1, 0, 1, 2):
            for n in (-2, -1, 0, 1, 2):
                out.append(p + 2 * m * w1 + 2 * n * w3)
    return out


def build_mesh(spec: SurfaceSpec, res: int = 64, cutoff: float | None = None,
               check: bool = True) -> Mesh:
    """Grid the fundamental domain, integrate omega along a BFS tree, triangulate kept cells.

    Non-tree grid edges are integrated too; the largest mismatch between the
    tree positions and an edge integral is the path-independence residual.
    """
    if res < 1:
        raise ValueError("resolution must be positive")
    if check:
        M = spec.system.matrix
        scale = max(float(spec.system.meta.get("scale", 0.0)), float(np.max(np.abs(M))) if M.size else 0.0, 1e-300)
        for c in (spec.coeffs1, spec.coeffs2):
            if np.linalg.norm(M @ c) > TOLERANCES["kernel"] * scale * np.linalg.norm(c):
                raise UnverifiedSpecError("coefficients are not in the kernel of the end form")
    torus = spec.frame.is_torus
    grid, diam = _torus_grid(spec, res) if torus else _sphere_grid(spec, res)
    if cutoff is None:
        cutoff = 0.05 * diam
    ny, nx = grid.points.shape
    P = grid.points.ravel()
    h = max(abs(grid.step_x), abs(grid.step_y))
    ends = _end_images(spec)
    dist = np.full(P.shape, np.inf)
    for e in ends:
        dist = np.minimum(dist, np.abs(P - e))
    keep = dist > max(cutoff, 1e-12)
    if cutoff > 0:
        keep &= dist > 0.25 * h

    # grid edges: (vertex a, vertex b, displacement from a)
    idx = np.arange(ny * nx).reshape(ny, nx)
    edges = []
    for d, step in (((0, 1), grid.step_x), ((1, 0), grid.step_y)):
        if torus:
            a = idx.ravel()
            b = np.roll(np.roll(idx, -d[0], axis=0), -d[1], axis=1).ravel()
        else:
            a = idx[: ny - d[0], : nx - d[1]].ravel()
            b = idx[d[0]:, d[1]:].ravel()
        edges.append((a, b, np.full(a.shape, step)))
    ea = np.concatenate([e[0] for e in edges])
    eb = np.concatenate([e[1] for e in edges])
    ed = np.concatenate([e[2] for e in edges])
    ok = keep[ea] & keep[eb]
    if ends:
        # ends carry no residue, so only edges running into an end are unusable
        reach = max(min(0.5 * h, cutoff), 1e-9)
        near = np.zeros(ea.shape, dtype=bool)
        for e in ends:
            near |= _segment_end_distance(P[ea], ed, e) < reach
        ok &= ~near
    ea, eb, ed = ea[ok], eb[ok], ed[ok]

    X = np.full((ny * nx, 3), np.nan)
    if len(ea):
        incr = segment_integrals(spec.pair, P[ea], P[ea] + ed)
    else:
        incr = np.zeros((0, 3))
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for k, (a, b) in enumerate(zip(ea.tolist(), eb.tolist())):
        adj.setdefault(a, []).append((b, k, 1))
        adj.setdefault(b, []).append((a, k, -1))

    kept = np.flatnonzero(keep)
    reached = np.zeros(ny * nx, dtype=bool)
    if len(kept):
        # base point: the kept vertex nearest the middle of the grid
        centre = P.mean()
        base = int(kept[np.argmin(np.abs(P[kept] - centre))])
        X[base] = 0.0
        reached[base] = True
        tree = set()
        queue = deque([base])
        while queue:
            v = queue.popleft()
            for w, k, sgn in adj.get(v, []):
                if not reached[w]:
                    reached[w] = True
                    X[w] = X[v] + sgn * incr[k]
                    tree.add(k)
                    queue.append(w)
        # isolated kept vertices (no usable edges) are dropped
        non_tree = [k for k in range(len(ea)) if k not in tree and reached[ea[k]] and reached[eb[k]]]
    else:
        non_tree = []
    if non_tree:
        nt = np.array(non_tree)
        mism = np.linalg.norm(X[ea[nt]] + incr[nt] - X[eb[nt]], axis=1)
        path_abs = float(np.max(mism))
    else:
        path_abs = 0.0
    valid = reached
    bbox = np.ptp(X[valid], axis=0) if np.any(valid) else np.zeros(3)
    bdiam = float(np.linalg.norm(bbox))
    stats = {"path_residual": path_abs, "path_residual_relative": path_abs / bdiam if bdiam > 0 else 0.0,
             "bbox_diameter": bdiam, "cutoff": float(cutoff), "resolution": res,
             "non_tree_edges": len(non_tree)}

    if spec.involution == "glide" and torus and res % 2 == 0:
        # (i, j) -> (i + res/2, res - 1 - j) is the glide on cell-centred nodes
        jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
        img = idx[(ny - 1 - jj) % ny, (ii + nx // 2) % nx]
        both = valid[idx.ravel()] & valid[img.ravel()]
        if np.any(both):
            diff = np.linalg.norm(X[idx.ravel()[both]] - X[img.ravel()[both]], axis=1)
            stats["identification_residual"] = float(np.max(diff))
        region = np.zeros((ny, nx), dtype=bool)
        region[: ny // 2, :] = True
        valid = valid & region.ravel()

    # faces from grid cells whose four corners survive
    faces = []
    cell_rows = ny if torus else ny - 1
    cell_cols = nx if torus else nx - 1
    edge_set = set(zip(ea.tolist(), eb.tolist()))
    for j in range(cell_rows):
        for i in range(cell_cols):
            v00 = idx[j, i]
            v10 = idx[j, (i + 1) % nx]
            v01 = idx[(j + 1) % ny, i]
            v11 = idx[(j + 1) % ny, (i + 1) % nx]
            corners = (v00, v10, v11, v01)
            if not all(valid[c] for c in corners):
                continue
            if not ((v00, v10) in edge_set and (v01, v11) in edge_set
                    and (v00, v01) in edge_set and (v10, v11) in edge_set):
                continue
            # skip cells whose interior holds an end
            cc = P[v00] + 0.5 * (grid.step_x + grid.step_y)
            if any(abs(cc - e) < 0.75 * h for e in ends):
                continue
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))

    order = np.flatnonzero(valid)
    remap = -np.ones(ny * nx, dtype=np.int64)
    remap[order] = np.arange(len(order))
    F = remap[np.array(faces, dtype=np.int64)] if faces else np.zeros((0, 3), dtype=np.int64)
    # vertices next to a removed node border an end region
    removed = ~keep
    border = np.zeros(ny * nx, dtype=bool)
    for d0, d1 in ((0, 1), (1, 0), (0, -1), (-1, 0)):
        if torus:
            nb = np.roll(np.roll(removed.reshape(ny, nx), d0, axis=0), d1, axis=1)
        else:
            nb = np.zeros((ny, nx), dtype=bool)
            r = removed.reshape(ny, nx)
            ys = slice(max(d0, 0), ny + min(d0, 0))
            xs = slice(max(d1, 0), nx + min(d1, 0))
            ys2 = slice(max(-d0, 0), ny + min(-d0, 0))
            xs2 = slice(max(-d1, 0), nx + min(-d1, 0))
            nb[ys, xs] = r[ys2, xs2]
        border |= nb.ravel()
    log.info("mesh %s: %d vertices, %d faces, path residual %.2e", spec.name, len(order), len(F), path_abs)
    return Mesh(X[order], F, border[order], P[order], stats)


# ---------------------------------------------------------------------------
# Wavefront OBJ


def format_obj(mesh: Mesh, comment: str = "spinorsurf mesh") -> str:
    lines = [f"# {comment}"]
    lines.extend("v %.17g %.17g %.17g" % tuple(v) for v in mesh.vertices)
    lines.extend("f %d %d %d" % tuple(f + 1) for f in mesh.faces)
    return "\n".join(lines) + "\n"


def export_obj(mesh: Mesh, path: str | Path, comment: str = "spinorsurf mesh") -> None:
    Path(path).write_text(format_obj(mesh, comment))


def parse_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)
