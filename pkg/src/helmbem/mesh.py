"""Triangle surface meshes: icosphere generation, plain-text I/O and statistics.

Meshes are flat-triangle surface meshes with outward-oriented winding.  The
icosphere starts from a regular icosahedron with one vertex on the positive
z axis and refines by edge-midpoint splits, projecting every new vertex back to
the requested radius, so level ``L`` carries ``20 * 4**L`` elements.

The file format is minimal and line-oriented: the first line holds the vertex
and face counts, followed by one ``x y z`` line per vertex and one ``i j k``
line of zero-based indices per face.  Floats are written with 17 significant
digits so a save/load round trip is bit exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TriangleMesh",
    "MeshFormatError",
    "MeshTopologyError",
    "MeshStats",
    "icosphere",
    "load_mesh",
    "save_mesh",
    "mesh_stats",
]


class MeshFormatError(ValueError):
    """Malformed mesh file; the message cites the offending line number."""


class MeshTopologyError(ValueError):
    """Mesh is not a consistently oriented closed surface."""


@dataclass
class TriangleMesh:
    """Flat-triangle surface mesh with derived per-element geometry."""

    vertices: np.ndarray
    faces: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must have shape (F, 3)")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.faces)

    def _corners(self):
        return (
            self.vertices[self.faces[:, 0]],
            self.vertices[self.faces[:, 1]],
            self.vertices[self.faces[:, 2]],
        )

    @property
    def centroids(self) -> np.ndarray:
        """Element centroids; these are the collocation nodes."""
        if "centroids" not in self._cache:
            a, b, c = self._corners()
            self._cache["centroids"] = (a + b + c) / 3.0
        return self._cache["centroids"]

    @property
    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            a, b, c = self._corners()
            cross = np.cross(b - a, c - a)
            self._cache["areas"] = 0.5 * np.linalg.norm(cross, axis=1)
        return self._cache["areas"]

    @property
    def normals(self) -> np.ndarray:
        """Unit normals following the winding order."""
        if "normals" not in self._cache:
            a, b, c = self._corners()
            cross = np.cross(b - a, c - a)
            self._cache["normals"] = cross / np.linalg.norm(cross, axis=1)[:, None]
        return self._cache["normals"]

    @property
    def element_diameters(self) -> np.ndarray:
        """Longest edge per element; the scale for near-singular refinement."""
        if "element_diameters" not in self._cache:
            a, b, c = self._corners()
            lengths = np.stack(
                [
                    np.linalg.norm(b - a, axis=1),
                    np.linalg.norm(c - b, axis=1),
                    np.linalg.norm(a - c, axis=1),
                ]
            )
            self._cache["element_diameters"] = lengths.max(axis=0)
        return self._cache["element_diameters"]

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs, shape (E, 2)."""
        if "edges" not in self._cache:
            directed = np.concatenate(
                [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
            )
            undirected = np.sort(directed, axis=1)
            self._cache["edges"] = np.unique(undirected, axis=0)
        return self._cache["edges"]

    def signed_volume(self) -> float:
        """Volume enclosed by the surface, positive for outward winding."""
        a, b, c = self._corners()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def validate(self) -> None:
        """Check for a closed, consistently oriented surface.

        Raises
        ------
        MeshTopologyError
            If any index is out of range, an element is degenerate, an edge is
            not shared by exactly two faces with opposite direction, or the
            Euler characteristic is not that of a sphere-like surface.
        """
        if self.faces.min(initial=0) < 0 or self.faces.max(initial=-1) >= self.n_vertices:
            raise MeshTopologyError("face index out of range")
        if np.any(self.areas <= 0.0) or not np.all(np.isfinite(self.areas)):
            bad = int(np.argmin(self.areas))
            raise MeshTopologyError(f"degenerate element {bad}")
        directed = {}
        for f, (i, j, k) in enumerate(self.faces):
            for a, b in ((i, j), (j, k), (k, i)):
                if (a, b) in directed:
                    raise MeshTopologyError(
                        f"directed edge ({a}, {b}) appears twice; inconsistent winding"
                    )
                directed[(a, b)] = f
        for (a, b) in directed:
            if (b, a) not in directed:
                raise MeshTopologyError(f"edge ({a}, {b}) is not shared by two faces")
        euler = self.n_vertices - len(self.edges()) + self.n_elements
        if euler != 2:
            raise MeshTopologyError(f"Euler characteristic {euler}, expected 2")
        if self.signed_volume() <= 0.0:
            raise MeshTopologyError("winding encloses non-positive volume")


def _base_icosahedron(radius: float) -> TriangleMesh:
    """Regular icosahedron with a vertex on the +z axis."""
    upper_z = 1.0 / np.sqrt(5.0)
    ring = 2.0 / np.sqrt(5.0)
    verts = [(0.0, 0.0, 1.0)]
    for j in range(5):
        az = 2.0 * np.pi * j / 5.0
        verts.append((ring * np.cos(az), ring * np.sin(az), upper_z))
    for j in range(5):
        az = 2.0 * np.pi * (j + 0.5) / 5.0
        verts.append((ring * np.cos(az), ring * np.sin(az), -upper_z))
    verts.append((0.0, 0.0, -1.0))
    faces = []
    for j in range(5):
        jn = (j + 1) % 5
        faces.append((0, 1 + j, 1 + jn))
        faces.append((1 + j, 6 + j, 1 + jn))
        faces.append((6 + j, 6 + jn, 1 + jn))
        faces.append((11, 6 + jn, 6 + j))
    return TriangleMesh(radius * np.array(verts), np.array(faces))


def icosphere(level: int, radius: float = 1.0) -> TriangleMesh:
    """Subdivided icosahedron with ``20 * 4**level`` elements at ``radius``.

    Each refinement splits every triangle at its edge midpoints into four and
    projects the new vertices radially onto the sphere; the winding (and with
    it the outward orientation) is inherited from the parent element.
    """
    if level != int(level) or level < 0:
        raise ValueError(f"level must be a non-negative integer, got {level!r}")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    mesh = _base_icosahedron(radius)
    for _ in range(int(level)):
        verts = [tuple(v) for v in mesh.vertices]
        midpoint = {}

        def midpoint_index(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
                m *= radius / np.linalg.norm(m)
                midpoint[key] = len(verts)
                verts.append(tuple(m))
            return midpoint[key]

        faces = []
        for i, j, k in mesh.faces:
            mij = midpoint_index(i, j)
            mjk = midpoint_index(j, k)
            mki = midpoint_index(k, i)
            faces.extend([(i, mij, mki), (j, mjk, mij), (k, mki, mjk), (mij, mjk, mki)])
        mesh = TriangleMesh(np.array(verts), np.array(faces))
    return mesh


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write a mesh in the plain-text format described in the module docstring."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_elements}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.faces:
            fh.write(f"{i} {j} {k}\n")


def load_mesh(path, validate: bool = True) -> TriangleMesh:
    """Read a mesh written by :func:`save_mesh` and (optionally) validate it."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MeshFormatError("line 1: empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise MeshFormatError("line 1: expected vertex and face counts")
    try:
        n_verts, n_faces = int(head[0]), int(head[1])
    except ValueError as exc:
        raise MeshFormatError(f"line 1: {exc}") from None
    if len(lines) != 1 + n_verts + n_faces:
        raise MeshFormatError(
            f"line {len(lines)}: expected {1 + n_verts + n_faces} lines, got {len(lines)}"
        )
    verts = np.empty((n_verts, 3))
    for i in range(n_verts):
        parts = lines[1 + i].split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {2 + i}: expected three coordinates")
        try:
            verts[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise MeshFormatError(f"line {2 + i}: {exc}") from None
    faces = np.empty((n_faces, 3), dtype=np.int64)
    for i in range(n_faces):
        parts = lines[1 + n_verts + i].split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {2 + n_verts + i}: expected three indices")
        try:
            faces[i] = [int(p) for p in parts]
        except ValueError as exc:
            raise MeshFormatError(f"line {2 + n_verts + i}: {exc}") from None
    mesh = TriangleMesh(verts, faces)
    if validate:
        mesh.validate()
    return mesh


@dataclass
class MeshStats:
    """Summary geometry of a mesh, as printed by the command line tool."""

    n_vertices: int
    n_elements: int
    edge_min: float
    edge_mean: float
    edge_max: float
    total_area: float
    mean_centroid_norm: float
    diameter: float
    elements_per_wavelength: float | None = None


def _max_pairwise_distance(points: np.ndarray) -> float:
    best = 0.0
    chunk = 512
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(-1)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def mesh_stats(mesh: TriangleMesh, frequency_hz: float | None = None) -> MeshStats:
    """Geometry summary; with a frequency, also elements per wavelength.

    Elements per wavelength is the acoustic wavelength divided by the mean
    edge length; the usual meshing rule asks for six to eight.
    """
    from .analytic import SPEED_OF_SOUND_M_PER_S

    edges = mesh.edges()
    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    epw = None
    if frequency_hz is not None:
        if frequency_hz <= 0.0:
            raise ValueError("frequency must be positive")
        epw = float(SPEED_OF_SOUND_M_PER_S / frequency_hz / lengths.mean())
    return MeshStats(
        n_vertices=mesh.n_vertices,
        n_elements=mesh.n_elements,
        edge_min=float(lengths.min()),
        edge_mean=float(lengths.mean()),
        edge_max=float(lengths.max()),
        total_area=float(mesh.areas.sum()),
        mean_centroid_norm=float(np.linalg.norm(mesh.centroids, axis=1).mean()),
        diameter=_max_pairwise_distance(mesh.vertices),
        elements_per_wavelength=epw,
    )
