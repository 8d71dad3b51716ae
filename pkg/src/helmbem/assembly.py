"""Dense collocation assembly of the boundary operator matrices.

Constant elements are used throughout: one degree of freedom per flat triangle,
collocated at the element centroid.  Entry ``(i, j)`` of each matrix is the
integral of the corresponding kernel over element ``j`` for the collocation
node of element ``i``.

Integration strategy per entry:

* regular pairs use a symmetric Gauss rule on the triangle,
* near-singular pairs (node closer to the source element than a multiple of
  its diameter) are refined by recursive edge-midpoint subdivision,
* the single-layer diagonal splits the element into three sub-triangles at
  the centroid and integrates in polar-type coordinates, which cancel the
  ``1/r`` singularity,
* the hypersingular diagonal subtracts the static kernel: the difference is
  weakly singular and integrated like the single layer, while the static
  finite part over a flat triangle has a closed form built from edge terms.

The normal-derivative diagonals vanish identically for flat elements with
centroid collocation, since the separation vector is orthogonal to the normal.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .mesh import TriangleMesh

__all__ = [
    "QuadratureConfig",
    "OperatorSet",
    "AssemblyConvergenceError",
    "OPERATOR_NAMES",
    "triangle_rule",
    "assemble",
    "self_term_single_layer",
    "self_term_hypersingular",
    "static_hypersingular_finite_part",
]

OPERATOR_NAMES = ("single_layer", "double_layer", "adj_double_layer", "hypersingular")

_DUMP_MAGIC = b"HBEMOPS1"


class AssemblyConvergenceError(RuntimeError):
    """Self-term quadrature failed its order-doubling check.

    ``entries`` lists ``(element_index, achieved_estimate)`` for the offenders.
    """

    def __init__(self, message: str, entries):
        super().__init__(message)
        self.entries = entries


def _sym3(a: float):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _sym6(a: float, b: float):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _rule(groups):
    bary, weights = [], []
    for w, pts in groups:
        bary.extend(pts)
        weights.extend([w] * len(pts))
    return np.array(bary), np.array(weights)


_TRIANGLE_RULES = {
    1: _rule([(1.0, [(1 / 3, 1 / 3, 1 / 3)])]),
    3: _rule([(1 / 3, _sym3(1 / 6))]),
    6: _rule(
        [
            (0.223381589678011, _sym3(0.445948490915965)),
            (0.109951743655322, _sym3(0.091576213509771)),
        ]
    ),
    7: _rule(
        [
            (0.225, [(1 / 3, 1 / 3, 1 / 3)]),
            (0.132394152788506, _sym3(0.470142064105115)),
            (0.125939180544827, _sym3(0.101286507323456)),
        ]
    ),
    12: _rule(
        [
            (0.116786275726379, _sym3(0.249286745170910)),
            (0.050844906370207, _sym3(0.063089014491502)),
            (0.082851075618374, _sym6(0.053145049844816, 0.310352451033785)),
        ]
    ),
    13: _rule(
        [
            (-0.149570044467670, [(1 / 3, 1 / 3, 1 / 3)]),
            (0.175615257433204, _sym3(0.260345966079038)),
            (0.053347235608839, _sym3(0.065130102902216)),
            (0.077113760890257, _sym6(0.048690315425316, 0.312865496004875)),
        ]
    ),
}


def triangle_rule(points: int):
    """Symmetric triangle rule with the given point count.

    Returns barycentric coordinates of shape ``(points, 3)`` and weights that
    sum to one, so integrals are ``area * sum(w_q f_q)``.  Available counts:
    1, 3, 6, 7, 12 and 13 (polynomial degrees 1, 2, 4, 5, 6 and 7).
    """
    try:
        return _TRIANGLE_RULES[points]
    except KeyError:
        raise ValueError(
            f"no rule with {points} points; choose from {sorted(_TRIANGLE_RULES)}"
        ) from None


def _gauss01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs of the assembly quadrature.

    ``regular_points`` selects the symmetric triangle rule for well-separated
    pairs.  A source element is treated as near-singular when the collocation
    node is closer to its centroid than ``near_threshold`` times its diameter;
    such elements are split recursively up to ``near_max_depth`` times.  The
    self terms use a ``self_radial_order x self_angular_order`` product rule
    per sub-triangle and must pass an order-doubling check at
    ``self_tolerance`` relative accuracy.
    """

    regular_points: int = 7
    near_threshold: float = 2.0
    near_max_depth: int = 4
    self_radial_order: int = 8
    self_angular_order: int = 24
    self_tolerance: float = 1e-10

    def digest(self) -> bytes:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).digest()


@dataclass
class OperatorSet:
    """Dense operator matrices for one mesh and wavenumber.

    Matrices not requested at assembly time are ``None``.  ``metadata`` holds
    the self-term convergence estimate, near-pair count and timing.
    """

    n: int
    k: float
    single_layer: np.ndarray | None = None
    double_layer: np.ndarray | None = None
    adj_double_layer: np.ndarray | None = None
    hypersingular: np.ndarray | None = None
    config: QuadratureConfig | None = None
    metadata: dict = field(default_factory=dict)

    def matrices(self) -> dict[str, np.ndarray]:
        return {
            name: getattr(self, name)
            for name in OPERATOR_NAMES
            if getattr(self, name) is not None
        }

    def save(self, path) -> None:
        """Binary dump: header (size, wavenumber, config hash) plus matrices."""
        digest = self.config.digest() if self.config is not None else b"\x00" * 32
        present = np.array(
            [getattr(self, name) is not None for name in OPERATOR_NAMES], dtype=np.uint8
        )
        with open(path, "wb") as fh:
            fh.write(_DUMP_MAGIC)
            np.array([self.n], dtype="<u8").tofile(fh)
            np.array([self.k], dtype="<f8").tofile(fh)
            fh.write(digest)
            present.tofile(fh)
            for name in OPERATOR_NAMES:
                mat = getattr(self, name)
                if mat is not None:
                    np.ascontiguousarray(mat, dtype="<c16").tofile(fh)

    @classmethod
    def load(cls, path) -> "OperatorSet":
        with open(path, "rb") as fh:
            if fh.read(len(_DUMP_MAGIC)) != _DUMP_MAGIC:
                raise ValueError(f"{path}: not an operator dump")
            n = int(np.fromfile(fh, dtype="<u8", count=1)[0])
            k = float(np.fromfile(fh, dtype="<f8", count=1)[0])
            digest = fh.read(32)
            present = np.fromfile(fh, dtype=np.uint8, count=len(OPERATOR_NAMES))
            out = cls(n=n, k=k, metadata={"config_digest": digest.hex()})
            for name, flag in zip(OPERATOR_NAMES, present):
                if flag:
                    mat = np.fromfile(fh, dtype="<c16", count=n * n).reshape(n, n)
                    setattr(out, name, mat)
        return out


def _flat_corners(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    if v.shape[-2:] != (3, 3):
        raise ValueError("expected triangle corner array of shape (..., 3, 3)")
    return v.reshape(-1, 3, 3)


def _self_polar_geometry(corners: np.ndarray):
    """Sub-triangle fan around the centroid for the self-term quadrature."""
    centroid = corners.mean(axis=1)
    edge_a = corners - centroid[:, None, :]
    edge_b = np.roll(corners, -1, axis=1) - centroid[:, None, :]
    sub_area = 0.5 * np.linalg.norm(np.cross(edge_a, edge_b), axis=2)
    return edge_a, edge_b, sub_area


def _self_polar_r_w(corners: np.ndarray, radial_order: int, angular_order: int):
    """Distances and weights of the polar product rule, singularity removed.

    In the sub-triangle parametrisation ``y = c + u ((1-v) e_a + v e_b)`` the
    Jacobian is ``2 A u`` which cancels one power of ``1/r``; the returned
    weights contain that factor.
    """
    edge_a, edge_b, sub_area = _self_polar_geometry(corners)
    gu, wu = _gauss01(radial_order)
    gv, wv = _gauss01(angular_order)
    evec = (
        edge_a[:, :, None, :] * (1.0 - gv)[None, None, :, None]
        + edge_b[:, :, None, :] * gv[None, None, :, None]
    )
    span = np.linalg.norm(evec, axis=3)
    r = gu[None, None, :, None] * span[:, :, None, :]
    w = (
        (gu * wu)[None, None, :, None]
        * wv[None, None, None, :]
        * (2.0 * sub_area)[:, :, None, None]
    )
    return r, w


def self_term_single_layer(
    vertices, k: float, radial_order: int = 8, angular_order: int = 24
):
    """Single-layer self terms for triangles collocated at their centroids."""
    corners = _flat_corners(vertices)
    r, w = _self_polar_r_w(corners, radial_order, angular_order)
    vals = (np.exp(1j * k * r) / (4.0 * np.pi * r) * w).sum(axis=(1, 2, 3))
    shape = np.asarray(vertices).shape[:-2]
    return vals.reshape(shape) if shape else complex(vals[0])


def _wave_correction(s: np.ndarray) -> np.ndarray:
    """Stable evaluation of ``exp(s)(1 - s) - 1`` for ``s = i k r``.

    For small ``|s|`` the direct form cancels catastrophically; a short series
    ``-s^2/2 - s^3/3 - s^4/8 - ...`` (terms ``s^m (1-m)/m!``) takes over.
    """
    s = np.asarray(s, dtype=complex)
    out = np.exp(s) * (1.0 - s) - 1.0
    small = np.abs(s) < 0.5
    if np.any(small):
        ss = s[small]
        acc = np.zeros_like(ss)
        term = np.ones_like(ss)
        fact = 1.0
        for m in range(1, 12):
            term = term * ss
            fact *= m
            if m >= 2:
                acc += term * ((1.0 - m) / fact)
        out[small] = acc
    return out


def static_hypersingular_finite_part(vertices):
    """Closed-form finite part of ``1/(4 pi r^3)`` over flat triangles.

    Collocation is at the centroid; the value is assembled from per-edge
    contributions ``(t_b / r_b - t_a / r_a) / d`` with ``d`` the in-plane
    distance from the centroid to the edge line and ``t`` the signed offsets
    of the edge endpoints from the foot of the perpendicular.  The result is
    negative real and scales like one over the element size.
    """
    corners = _flat_corners(vertices)
    x = corners.mean(axis=1)
    p = corners
    q = np.roll(corners, -1, axis=1)
    edge = q - p
    length = np.linalg.norm(edge, axis=2)
    tangent = edge / length[:, :, None]
    proj = np.einsum("mei,mei->me", x[:, None, :] - p, tangent)
    foot = p + proj[:, :, None] * tangent
    d = np.linalg.norm(x[:, None, :] - foot, axis=2)
    t_a = -proj
    t_b = length - proj
    r_a = np.linalg.norm(x[:, None, :] - p, axis=2)
    r_b = np.linalg.norm(x[:, None, :] - q, axis=2)
    per_edge = (t_b / r_b - t_a / r_a) / d
    vals = -per_edge.sum(axis=1) / (4.0 * np.pi)
    shape = np.asarray(vertices).shape[:-2]
    return vals.reshape(shape) if shape else float(vals[0])


def self_term_hypersingular(
    vertices, k: float, radial_order: int = 8, angular_order: int = 24
):
    """Hypersingular self terms: static finite part plus wave correction.

    On the element plane the kernel reduces to ``exp(ikr)(1 - ikr)/(4 pi r^3)``;
    subtracting its static value ``1/(4 pi r^3)`` leaves a weakly singular
    remainder handled by the polar rule, while the static finite part is exact.
    """
    corners = _flat_corners(vertices)
    static = static_hypersingular_finite_part(corners)
    r, w = _self_polar_r_w(corners, radial_order, angular_order)
    corr = (_wave_correction(1j * k * r) / (4.0 * np.pi * r**3) * w).sum(axis=(1, 2, 3))
    vals = static + corr
    shape = np.asarray(vertices).shape[:-2]
    return vals.reshape(shape) if shape else complex(vals[0])


def _partial_kernels(k, diff, r, nx, ny, want):
    """Kernel values restricted to the requested operators."""
    inv_r = 1.0 / r
    g = np.exp(1j * k * r) * (inv_r / (4.0 * np.pi))
    out = {}
    slope = None
    if {"double_layer", "adj_double_layer", "hypersingular"} & want:
        slope = 1j * k - inv_r
    if "single_layer" in want:
        out["single_layer"] = g
    if {"double_layer", "hypersingular"} & want:
        dr_dny = -np.einsum("...i,...i->...", diff, ny) * inv_r
        if "double_layer" in want:
            out["double_layer"] = g * slope * dr_dny
    if {"adj_double_layer", "hypersingular"} & want:
        dr_dnx = np.einsum("...i,...i->...", diff, nx) * inv_r
        if "adj_double_layer" in want:
            out["adj_double_layer"] = g * slope * dr_dnx
    if "hypersingular" in want:
        nxny = np.einsum("...i,...i->...", nx, ny)
        out["hypersingular"] = g * (
            (3.0 * inv_r * inv_r - 3j * k * inv_r - k * k) * dr_dnx * dr_dny
            + inv_r * (inv_r - 1j * k) * nxny
        )
    return out


def _near_pairs(mesh: TriangleMesh, config: QuadratureConfig):
    """Off-diagonal pairs whose source element sits too close to the node."""
    nodes = mesh.centroids
    diam = mesh.element_diameters
    rows_i, cols_j = [], []
    chunk = 256
    n = mesh.n_elements
    for start in range(0, n, chunk):
        block = nodes[start : start + chunk]
        dist = np.linalg.norm(block[:, None, :] - nodes[None, :, :], axis=2)
        mask = dist < config.near_threshold * diam[None, :]
        ii, jj = np.nonzero(mask)
        ii = ii + start
        keep = ii != jj
        rows_i.append(ii[keep])
        cols_j.append(jj[keep])
    return np.concatenate(rows_i), np.concatenate(cols_j)


def _refine_near(mesh, k, config, want, pair_i, pair_j):
    """Adaptive subdivision integrals for the near-singular pairs."""
    bary, base_w = triangle_rule(config.regular_points)
    nodes = mesh.centroids
    node_normals = mesh.normals
    acc = {name: np.zeros(len(pair_i), dtype=complex) for name in want}

    tri = mesh.vertices[mesh.faces[pair_j]]
    owner = np.arange(len(pair_i))
    depth = 0
    while len(tri):
        centroid = tri.mean(axis=1)
        edges = np.stack(
            [
                np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ]
        )
        diam = edges.max(axis=0)
        x = nodes[pair_i[owner]]
        dist = np.linalg.norm(x - centroid, axis=1)
        split = (depth < config.near_max_depth) & (dist < config.near_threshold * diam)

        leaves = ~split
        if np.any(leaves):
            tl = tri[leaves]
            ol = owner[leaves]
            pts = np.einsum("qb,lbi->lqi", bary, tl)
            area = 0.5 * np.linalg.norm(
                np.cross(tl[:, 1] - tl[:, 0], tl[:, 2] - tl[:, 0]), axis=1
            )
            w = base_w[None, :] * area[:, None]
            xl = nodes[pair_i[ol]][:, None, :]
            diff = xl - pts
            r = np.sqrt(np.einsum("lqi,lqi->lq", diff, diff))
            kern = _partial_kernels(
                k,
                diff,
                r,
                node_normals[pair_i[ol]][:, None, :],
                node_normals[pair_j[ol]][:, None, :],
                want,
            )
            for name in want:
                np.add.at(acc[name], ol, np.einsum("lq,lq->l", kern[name], w))

        if np.any(split):
            ts = tri[split]
            os_ = owner[split]
            a, b, c = ts[:, 0], ts[:, 1], ts[:, 2]
            mab = 0.5 * (a + b)
            mbc = 0.5 * (b + c)
            mca = 0.5 * (c + a)
            children = np.concatenate(
                [
                    np.stack([a, mab, mca], axis=1),
                    np.stack([b, mbc, mab], axis=1),
                    np.stack([c, mca, mbc], axis=1),
                    np.stack([mab, mbc, mca], axis=1),
                ]
            )
            tri = children
            owner = np.concatenate([os_, os_, os_, os_])
        else:
            tri = tri[:0]
            owner = owner[:0]
        depth += 1
    return acc


def assemble(
    mesh: TriangleMesh,
    k: float,
    config: QuadratureConfig | None = None,
    operators=OPERATOR_NAMES,
) -> OperatorSet:
    """Assemble the requested dense operator matrices at wavenumber ``k``.

    Parameters
    ----------
    mesh : TriangleMesh
        Closed, outward-oriented triangle mesh.
    k : float
        Wavenumber in rad/m, strictly positive.
    config : QuadratureConfig, optional
    operators : iterable of str, optional
        Subset of :data:`OPERATOR_NAMES`; restricting it skips the untouched
        kernels entirely, which matters in frequency searches.

    Raises
    ------
    AssemblyConvergenceError
        If a self term fails its order-doubling accuracy check.
    """
    if k <= 0.0:
        raise ValueError("wavenumber must be positive")
    config = config or QuadratureConfig()
    want = set(operators)
    unknown = want - set(OPERATOR_NAMES)
    if unknown:
        raise ValueError(f"unknown operators {sorted(unknown)}")
    if not want:
        raise ValueError("no operators requested")

    t_start = time.perf_counter()
    n = mesh.n_elements
    bary, rule_w = triangle_rule(config.regular_points)
    corners = mesh.vertices[mesh.faces]
    panel_pts = np.einsum("qb,nbi->nqi", bary, corners)
    panel_w = rule_w[None, :] * mesh.areas[:, None]
    nodes = mesh.centroids
    normals = mesh.normals

    mats = {name: np.empty((n, n), dtype=complex) for name in want}
    # keeps the temporaries of one row block near 200 MB on the fine mesh
    block = max(1, min(n, int(1.2e6 // (n * len(bary)) + 1)))
    for start in range(0, n, block):
        rows = slice(start, min(start + block, n))
        xb = nodes[rows]
        diff = xb[:, None, None, :] - panel_pts[None, :, :, :]
        r = np.sqrt(np.einsum("bnqi,bnqi->bnq", diff, diff))
        idx = np.arange(start, rows.stop)
        r[idx - start, idx, :] = 1.0  # self panels are replaced afterwards
        kern = _partial_kernels(
            k,
            diff,
            r,
            normals[rows][:, None, None, :],
            normals[None, :, None, :],
            want,
        )
        for name in want:
            mats[name][rows] = np.einsum("bnq,nq->bn", kern[name], panel_w)

    pair_i, pair_j = _near_pairs(mesh, config)
    near = _refine_near(mesh, k, config, want, pair_i, pair_j)
    for name in want:
        mats[name][pair_i, pair_j] = near[name]

    estimates = {}
    if "single_layer" in want:
        coarse = self_term_single_layer(
            corners, k, config.self_radial_order, config.self_angular_order
        )
        fine = self_term_single_layer(
            corners, k, 2 * config.self_radial_order, 2 * config.self_angular_order
        )
        estimates["single_layer"] = np.abs(coarse - fine) / np.abs(fine)
        np.fill_diagonal(mats["single_layer"], fine)
    if "hypersingular" in want:
        coarse = self_term_hypersingular(
            corners, k, config.self_radial_order, config.self_angular_order
        )
        fine = self_term_hypersingular(
            corners, k, 2 * config.self_radial_order, 2 * config.self_angular_order
        )
        estimates["hypersingular"] = np.abs(coarse - fine) / np.abs(fine)
        np.fill_diagonal(mats["hypersingular"], fine)
    for name in ("double_layer", "adj_double_layer"):
        if name in want:
            np.fill_diagonal(mats[name], 0.0)

    bad = []
    worst = 0.0
    for name, est in estimates.items():
        worst = max(worst, float(est.max()))
        if np.any(est > config.self_tolerance):
            for idx in np.nonzero(est > config.self_tolerance)[0]:
                bad.append((name, int(idx), float(est[idx])))
    if bad:
        raise AssemblyConvergenceError(
            f"{len(bad)} self terms above tolerance {config.self_tolerance:g}; "
            f"worst {max(b[2] for b in bad):.3e}",
            bad,
        )

    out = OperatorSet(n=n, k=float(k), config=config)
    for name in want:
        setattr(out, name, mats[name])
    out.metadata = {
        "self_term_estimate": worst,
        "near_pairs": int(len(pair_i)),
        "assembly_seconds": time.perf_counter() - t_start,
    }
    return out
