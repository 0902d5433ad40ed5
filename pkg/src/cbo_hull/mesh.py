"""Surface-of-revolution tessellation and binary STL export."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError
from .hull import HullParams, hull_radius_profile, min_tail_radius

STL_HEADER = b"cbo-hull"


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh with consistent outward-facing winding."""

    vertices: np.ndarray  # (V, 3) float64, mm
    faces: np.ndarray     # (F, 3) int indices

    def volume(self) -> float:
        """Signed enclosed volume via the divergence theorem (mm^3)."""
        v0 = self.vertices[self.faces[:, 0]]
        v1 = self.vertices[self.faces[:, 1]]
        v2 = self.vertices[self.faces[:, 2]]
        return float(np.einsum("ij,ij->", v0, np.cross(v1, v2)) / 6.0)

    def edge_use_counts(self) -> dict[tuple[int, int], int]:
        """Undirected edge -> number of incident triangles."""
        counts: dict[tuple[int, int], int] = {}
        for i, j, k in self.faces:
            for e in ((i, j), (j, k), (k, i)):
                key = (min(e), max(e))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_watertight(self) -> bool:
        """Every edge shared by exactly two triangles."""
        return all(c == 2 for c in self.edge_use_counts().values())


def tessellate(p: HullParams, axial_steps: int = 256, angular_steps: int = 64) -> TriMesh:
    """Triangulate the hull surface of revolution.

    `axial_steps` counts segments along the axis (stations = axial_steps + 1,
    apexes included); `angular_steps` counts vertices per ring.  The closed
    mesh has 2 * angular_steps * (axial_steps - 1) triangles: two apex fans
    plus two triangles per quad between adjacent rings.
    """
    if axial_steps < 16:
        raise ValueError(f"axial_steps must be >= 16, got {axial_steps}")
    if angular_steps < 8:
        raise ValueError(f"angular_steps must be >= 8, got {angular_steps}")
    if min_tail_radius(p) < 0.0:
        raise InvalidGeometryError("tail radius goes negative; surface self-intersects")

    x = np.linspace(0.0, p.length, axial_steps + 1)
    r = np.maximum(hull_radius_profile(p, x), 0.0)  # clear endpoint round-off
    phi = 2.0 * np.pi * np.arange(angular_steps) / angular_steps
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)

    # vertex 0: nose apex; then (axial_steps - 1) rings; last vertex: tail apex
    rings = []
    for xi, ri in zip(x[1:-1], r[1:-1]):
        ring = np.column_stack([np.full(angular_steps, xi), ri * cos_phi, ri * sin_phi])
        rings.append(ring)
    vertices = np.vstack([[[0.0, 0.0, 0.0]], *rings, [[p.length, 0.0, 0.0]]])
    tail_apex = len(vertices) - 1

    def ring_vertex(ring: int, j: int) -> int:
        return 1 + ring * angular_steps + j % angular_steps

    faces = []
    for j in range(angular_steps):
        faces.append((0, ring_vertex(0, j), ring_vertex(0, j + 1)))
    n_rings = axial_steps - 1
    for i in range(n_rings - 1):
        for j in range(angular_steps):
            a = ring_vertex(i, j)
            b = ring_vertex(i, j + 1)
            c = ring_vertex(i + 1, j + 1)
            d = ring_vertex(i + 1, j)
            faces.append((a, b, c))
            faces.append((a, c, d))
    for j in range(angular_steps):
        faces.append((tail_apex, ring_vertex(n_rings - 1, j + 1), ring_vertex(n_rings - 1, j)))

    return TriMesh(vertices=vertices, faces=np.asarray(faces, dtype=np.int64))


def write_stl(mesh: TriMesh, path) -> None:
    """Write binary little-endian STL (units mm, facet attribute zero)."""
    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    normals = np.cross(v1 - v0, v2 - v0)
    lengths = np.linalg.norm(normals, axis=1)
    safe = lengths > 0.0
    normals[safe] /= lengths[safe, None]

    header = STL_HEADER + b"\x00" * (80 - len(STL_HEADER))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<I", len(mesh.faces)))
        record = struct.Struct("<12fH")
        for nrm, a, b, c in zip(normals, v0, v1, v2):
            fh.write(record.pack(*nrm, *a, *b, *c, 0))
