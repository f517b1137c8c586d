"""Structured simplicial meshes on rectangles and boxes."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    nodes: np.ndarray  # (n_nodes, dim)
    elements: np.ndarray  # (n_elem, dim + 1), positively oriented
    extents: tuple
    shape: tuple  # cells per direction
    boundary: np.ndarray = field(init=False)
    element_volumes: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "element_volumes", signed_volumes(self.nodes, self.elements))
        object.__setattr__(self, "boundary", boundary_nodes(self))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))


def signed_volumes(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    x = nodes[elements]
    edges = x[:, 1:, :] - x[:, :1, :]
    d = nodes.shape[1]
    return np.linalg.det(edges) / factorial(d)


def _check_counts(*counts):
    for c in counts:
        if int(c) != c or c < 1:
            raise InvalidArgument(f"cell counts must be positive integers, got {counts}")


def _check_lengths(*lengths):
    if any(not np.isfinite(v) or v <= 0 for v in lengths):
        raise InvalidArgument(f"extents must be positive, got {lengths}")


def rect_mesh(Lx: float, Ly: float, NX: int, NY: int) -> Mesh:
    """Triangulated rectangle, every cell cut from lower left to upper right."""
    _check_counts(NX, NY)
    _check_lengths(Lx, Ly)
    x = np.linspace(0.0, Lx, NX + 1)
    y = np.linspace(0.0, Ly, NY + 1)
    X, Y = np.meshgrid(x, y)  # node index = j*(NX+1) + i
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(NX), np.arange(NY))
    n00 = (j * (NX + 1) + i).ravel()
    n10, n01, n11 = n00 + 1, n00 + NX + 1, n00 + NX + 2
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh(2, nodes, elements, (float(Lx), float(Ly)), (NX, NY))


# Kuhn split of the unit cube: one tet per permutation of the axes, each the
# path 000 -> e_a -> e_a+e_b -> 111.
_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def box_mesh(Lx, Ly, Lz, NX, NY, NZ) -> Mesh:
    _check_counts(NX, NY, NZ)
    _check_lengths(Lx, Ly, Lz)
    x = np.linspace(0.0, Lx, NX + 1)
    y = np.linspace(0.0, Ly, NY + 1)
    z = np.linspace(0.0, Lz, NZ + 1)
    Z, Y, X = np.meshgrid(z, y, x, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    stride = np.array([1, NX + 1, (NX + 1) * (NY + 1)])
    k, j, i = np.meshgrid(np.arange(NZ), np.arange(NY), np.arange(NX), indexing="ij")
    base = (i * stride[0] + j * stride[1] + k * stride[2]).ravel()
    tets = []
    for perm in _PERMS:
        corner = np.zeros(3, dtype=int)
        verts = [base.copy()]
        for axis in perm:
            corner[axis] = 1
            verts.append(base + corner @ stride)
        tets.append(np.column_stack(verts))
    elements = np.stack(tets, axis=1).reshape(-1, 4)
    vol = signed_volumes(nodes, elements)
    flip = vol < 0
    elements[flip, 1], elements[flip, 2] = elements[flip, 2], elements[flip, 1].copy()
    return Mesh(3, nodes, elements, (float(Lx), float(Ly), float(Lz)), (NX, NY, NZ))


def boundary_nodes(mesh: Mesh, tol: float = 1e-12) -> np.ndarray:
    ext = np.asarray(mesh.extents)
    on = np.isclose(mesh.nodes, 0.0, atol=tol * ext) | np.isclose(mesh.nodes, ext, atol=tol * ext, rtol=0)
    return np.flatnonzero(on.any(axis=1))
