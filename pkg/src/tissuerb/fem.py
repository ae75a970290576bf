"""Bilinear quadrilateral finite elements for 2D isotropic linear elasticity (plane strain).

Nodes are numbered lexicographically by (y, x) and each node carries the
interleaved unknowns (u_x, u_y), so node ``k`` owns dofs ``2k`` and ``2k+1``.
"""
from dataclasses import dataclass, field

import numpy as np

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)
# reference corners, counter-clockwise
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


@dataclass(frozen=True)
class MaterialParams:
    lam: float = 50.0
    mu: float = 50.0
    rho: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and self.rho > 0):
            raise ValueError(f"material parameters must be positive, got {self}")

    def elasticity_matrix(self):
        """Plane-strain constitutive matrix in Voigt notation (xx, yy, xy)."""
        lam, mu = self.lam, self.mu
        return np.array([[lam + 2 * mu, lam, 0.0],
                         [lam, lam + 2 * mu, 0.0],
                         [0.0, 0.0, mu]])


@dataclass
class Mesh2D:
    nx: int
    ny: int
    lx: float
    ly: float
    coords: np.ndarray
    elements: np.ndarray
    dirichlet_nodes: np.ndarray

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def area(self):
        return self.lx * self.ly

    def node_index(self, i, j):
        return j * (self.nx + 1) + i


@dataclass
class DofMap:
    n_dofs: int
    free: np.ndarray
    dirichlet: np.ndarray
    # position of each global dof in ``free`` (-1 for Dirichlet dofs)
    free_position: np.ndarray = field(repr=False)

    @classmethod
    def from_mesh(cls, mesh):
        n_dofs = 2 * mesh.n_nodes
        dirichlet = np.sort(np.concatenate([2 * mesh.dirichlet_nodes, 2 * mesh.dirichlet_nodes + 1]))
        free = np.setdiff1d(np.arange(n_dofs), dirichlet)
        pos = -np.ones(n_dofs, dtype=int)
        pos[free] = np.arange(free.size)
        return cls(n_dofs, free, dirichlet, pos)


@dataclass
class Assembly:
    mesh: Mesh2D
    material: MaterialParams
    K: np.ndarray
    M: np.ndarray
    dofs: DofMap


def build_mesh(nx, ny, lx=1.0, ly=2.0, strip=(1.5, 2.0)):
    """Tensor-grid mesh of (0, lx) x (0, ly); Dirichlet nodes on x in {0, lx}, y in ``strip``."""
    if nx < 1 or ny < 1:
        raise ValueError("need at least one element per direction")
    hy = ly / ny
    j_lo, j_hi = strip[0] / hy, strip[1] / hy
    if not (np.isclose(j_lo, round(j_lo)) and np.isclose(j_hi, round(j_hi))):
        raise ValueError(f"ny={ny} does not put y={strip[0]} and y={strip[1]} on grid lines")
    j_lo, j_hi = int(round(j_lo)), int(round(j_hi))

    x = np.linspace(0.0, lx, nx + 1)
    y = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(x, y)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = (j * (nx + 1) + i).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])

    dn = [jj * (nx + 1) + ii for jj in range(j_lo, j_hi + 1) for ii in (0, nx)]
    return Mesh2D(nx, ny, lx, ly, coords, elements, np.array(sorted(dn), dtype=int))


def _shape_derivatives(xi, eta):
    dxi = 0.25 * _XI * (1 + eta * _ETA)
    deta = 0.25 * _ETA * (1 + xi * _XI)
    return np.vstack([dxi, deta])


def _shape(xi, eta):
    return 0.25 * (1 + xi * _XI) * (1 + eta * _ETA)


def element_matrices(coords, mat):
    """Stiffness and consistent mass of one bilinear quad, 2x2 Gauss rule.

    ``coords`` is (4, 2), counter-clockwise. Returns (Ke, Me), both 8x8 in
    interleaved (u_x, u_y) per-node ordering.
    """
    coords = np.asarray(coords, dtype=float)
    D = mat.elasticity_matrix()
    Ke = np.zeros((8, 8))
    Me = np.zeros((8, 8))
    # corners first: catches non-convex and inverted elements as well
    for xi, eta in list(zip(_XI, _ETA)) + [(a, b) for b in _GAUSS for a in _GAUSS]:
        if np.linalg.det(_shape_derivatives(xi, eta) @ coords) <= 0:
            raise ValueError("degenerate or inverted element geometry")
    for eta in _GAUSS:
        for xi in _GAUSS:
            dN = _shape_derivatives(xi, eta)
            J = dN @ coords
            detJ = np.linalg.det(J)
            dNdx = np.linalg.solve(J, dN)
            Bm = np.zeros((3, 8))
            Bm[0, 0::2] = dNdx[0]
            Bm[1, 1::2] = dNdx[1]
            Bm[2, 0::2] = dNdx[1]
            Bm[2, 1::2] = dNdx[0]
            Ke += Bm.T @ D @ Bm * detJ
            N = _shape(xi, eta)
            Nm = np.zeros((2, 8))
            Nm[0, 0::2] = N
            Nm[1, 1::2] = N
            Me += mat.rho * Nm.T @ Nm * detJ
    return Ke, Me


def _element_dofs(conn):
    return np.column_stack([2 * conn, 2 * conn + 1]).ravel()


def assemble(mesh, mat):
    """Global dense stiffness and mass over all displacement unknowns (no constraints)."""
    n = 2 * mesh.n_nodes
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for conn in mesh.elements:
        Ke, Me = element_matrices(mesh.coords[conn], mat)
        d = _element_dofs(conn)
        K[np.ix_(d, d)] += Ke
        M[np.ix_(d, d)] += Me
    return Assembly(mesh, mat, K, M, DofMap.from_mesh(mesh))


def body_force(mesh, force):
    """Consistent nodal load for a constant body force (per unit volume)."""
    force = np.asarray(force, dtype=float)
    if force.shape != (2,) or not np.all(np.isfinite(force)):
        raise ValueError("body force must be two finite components")
    f = np.zeros(2 * mesh.n_nodes)
    for conn in mesh.elements:
        coords = mesh.coords[conn]
        fe = np.zeros(8)
        for eta in _GAUSS:
            for xi in _GAUSS:
                detJ = np.linalg.det(_shape_derivatives(xi, eta) @ coords)
                N = _shape(xi, eta)
                fe[0::2] += N * force[0] * detJ
                fe[1::2] += N * force[1] * detJ
        f[_element_dofs(conn)] += fe
    return f

