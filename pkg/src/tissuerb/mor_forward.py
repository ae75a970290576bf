"""Snapshot bases for the forward problem: POD variants, PSD (complex SVD) variants, Galerkin ROM.

All bases are stored in the original state ordering x = [q_s, v_s, q_e, v_e];
the (q, v)-blocked views needed by the componentwise and symplectic methods
are taken through the index sets of :class:`~tissuerb.coupled.StateLayout`.
"""
from dataclasses import dataclass, field

import numpy as np

from .coupled import StateLayout, poisson_matrix
from .numerics import LUSolver, SizeNotRealisable, numerical_rank, truncated_svd

FORWARD_METHODS = ("global-pod", "cw-pod", "pod-fixed-solid", "cw-pod-fixed-solid",
                   "gpsd", "psd-fixed-solid")
SYMPLECTIC_METHODS = ("gpsd", "psd-fixed-solid")
FIXED_SOLID_METHODS = ("pod-fixed-solid", "cw-pod-fixed-solid", "psd-fixed-solid")


@dataclass
class SnapshotSet:
    X: np.ndarray
    layout: StateLayout

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.shape[0] != self.layout.dim:
            raise ValueError(f"snapshots have {self.X.shape[0]} rows, layout has {self.layout.dim}")

    def rows(self, idx):
        return self.X[idx]

    @property
    def X_s(self):
        return self.X[self.layout.solid]

    @property
    def X_e(self):
        return self.X[self.layout.elastic]

    @property
    def X_q(self):
        return self.X[self.layout.q]

    @property
    def X_v(self):
        return self.X[self.layout.v]


@dataclass
class ReducedBasis:
    """Basis V (dim x N) with the reduced canonical pairing used for symplecticity checks.

    ``red_q``/``red_v`` pair reduced coordinates (only meaningful for the
    symplectic methods); ``n_fixed`` is the size of the leading identity block.
    """

    V: np.ndarray
    method: str
    layout: StateLayout
    n_fixed: int = 0
    red_q: np.ndarray = field(default=None, repr=False)
    red_v: np.ndarray = field(default=None, repr=False)
    singular_values: np.ndarray = field(default=None, repr=False)

    @property
    def N(self):
        return self.V.shape[1]

    def orthonormality_residual(self):
        return float(np.linalg.norm(self.V.T @ self.V - np.eye(self.N)))

    def symplecticity_residual(self):
        if self.red_q is None:
            raise ValueError(f"{self.method} basis carries no canonical pairing")
        J = self.layout.poisson_matrix()
        J_N = poisson_matrix(self.red_q, self.red_v, self.N)
        return float(np.linalg.norm(self.V.T @ J @ self.V - J_N))


@dataclass
class ReducedForwardModel:
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    x0: np.ndarray
    basis: ReducedBasis

    @property
    def dim(self):
        return self.E.shape[0]


def pod_energy_rank(s, fraction=0.999):
    """Smallest k whose leading squared singular values hold ``fraction`` of the energy."""
    s = np.asarray(s, dtype=float)
    if not 0 < fraction <= 1:
        raise ValueError("energy fraction must lie in (0, 1]")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonnegative and non-increasing")
    e = np.cumsum(s**2)
    if e.size == 0 or e[-1] == 0:
        raise ValueError("all singular values are zero")
    # guard against the ratio landing a rounding error below the threshold
    k = int(np.searchsorted(e / e[-1], fraction * (1 - 1e-14))) + 1
    return min(k, numerical_rank(s))


def pod(X, k):
    """First k left singular vectors of X, plus all singular values."""
    X = np.asarray(X, dtype=float)
    r = truncated_svd(X, min(X.shape))
    if not 1 <= k <= r.U.shape[1]:
        raise ValueError(f"requested {k} modes from a {X.shape} snapshot matrix")
    return r.U[:, :k], r.s


def _empty(layout):
    return np.zeros((layout.dim, 0))


def global_pod(snap, k):
    U, s = pod(snap.X, k)
    return ReducedBasis(U, "global-pod", snap.layout, singular_values=s)


def componentwise_pod(snap, k1, k2):
    lay = snap.layout
    V1, s1 = pod(snap.X_q, k1)
    V2, _ = pod(snap.X_v, k2)
    V = np.zeros((lay.dim, k1 + k2))
    V[lay.q, :k1] = V1
    V[lay.v, k1:] = V2
    return ReducedBasis(V, "cw-pod", lay, singular_values=s1)


def _fixed_solid(layout, Ve_rows_cols, method, **kw):
    """blkdiag(I_{2 n_s}, elastic part) in the original ordering."""
    ns2 = 2 * layout.n_s
    n_el = Ve_rows_cols.shape[1]
    V = np.zeros((layout.dim, ns2 + n_el))
    V[layout.solid, :ns2] = np.eye(ns2)
    V[layout.elastic, ns2:] = Ve_rows_cols
    return ReducedBasis(V, method, layout, n_fixed=ns2, **kw)


def pod_fixed_solid(snap, k_e):
    Ve, s = pod(snap.X_e, k_e)
    return _fixed_solid(snap.layout, Ve, "pod-fixed-solid", singular_values=s)


def componentwise_pod_fixed_solid(snap, k_eq, k_ev):
    lay = snap.layout
    Vq, s = pod(snap.rows(lay.q_e), k_eq)
    Vv, _ = pod(snap.rows(lay.v_e), k_ev)
    ne = lay.n_e
    Ve = np.zeros((2 * ne, k_eq + k_ev))
    Ve[:ne, :k_eq] = Vq
    Ve[ne:, k_eq:] = Vv
    return _fixed_solid(lay, Ve, "cw-pod-fixed-solid", singular_values=s)


def psd_complex_svd(Xq, Xv, k):
    """Orthosymplectic basis [[Phi, -Psi], [Psi, Phi]] from the SVD of Xq + i Xv.

    Rows are (q-block, v-block); the first k columns are the reduced q
    coordinates and the last k the matching v coordinates.
    """
    Z = np.asarray(Xq, dtype=float) + 1j * np.asarray(Xv, dtype=float)
    if not 1 <= k <= min(Z.shape):
        raise ValueError(f"requested {k} complex modes from a {Z.shape} snapshot matrix")
    U, s, _ = np.linalg.svd(Z, full_matrices=False)
    Phi, Psi = U[:, :k].real, U[:, :k].imag
    return np.block([[Phi, -Psi], [Psi, Phi]]), s


def _check_even(n_basis):
    if n_basis % 2 or n_basis < 2:
        raise SizeNotRealisable(f"symplectic basis size must be even and positive, got {n_basis}")
    return n_basis // 2


def gpsd(snap, n_basis):
    """Global PSD over the whole state in canonical (all-q, all-v) pairing."""
    k = _check_even(n_basis)
    lay = snap.layout
    W, s = psd_complex_svd(snap.X_q, snap.X_v, k)
    V = np.zeros((lay.dim, 2 * k))
    nq = lay.q.size
    V[lay.q] = W[:nq]
    V[lay.v] = W[nq:]
    return ReducedBasis(V, "gpsd", lay, red_q=np.arange(k), red_v=np.arange(k, 2 * k),
                        singular_values=s)


def psd_fixed_solid(snap, n_elastic):
    """PSD on the (q_e, v_e) rows only, unreduced hand states in front."""
    k = _check_even(n_elastic)
    lay = snap.layout
    W, s = psd_complex_svd(snap.rows(lay.q_e), snap.rows(lay.v_e), k)
    ns = lay.n_s
    red_q = np.concatenate([np.arange(ns), 2 * ns + np.arange(k)])
    red_v = np.concatenate([ns + np.arange(ns), 2 * ns + k + np.arange(k)])
    return _fixed_solid(lay, W, "psd-fixed-solid", red_q=red_q, red_v=red_v, singular_values=s)


def basis_for_size(method, snap, N):
    """Build ``method``'s basis with total size N (raises if N is not realisable)."""
    ns2 = 2 * snap.layout.n_s
    if method == "global-pod":
        return global_pod(snap, N)
    if method == "cw-pod":
        if N < 2:
            raise SizeNotRealisable("componentwise POD needs N >= 2")
        return componentwise_pod(snap, (N + 1) // 2, N // 2)
    if method == "gpsd":
        return gpsd(snap, N)
    ne_modes = N - ns2
    if ne_modes < 1:
        raise SizeNotRealisable(f"{method} needs N > {ns2} (solid block is fixed)")
    if method == "pod-fixed-solid":
        return pod_fixed_solid(snap, ne_modes)
    if method == "cw-pod-fixed-solid":
        if ne_modes < 2:
            raise SizeNotRealisable(f"{method} needs N >= {ns2 + 2}")
        return componentwise_pod_fixed_solid(snap, (ne_modes + 1) // 2, ne_modes // 2)
    if method == "psd-fixed-solid":
        return psd_fixed_solid(snap, ne_modes)
    raise ValueError(f"unknown forward method {method!r}")


def basis_by_energy(method, snap, fraction=0.999):
    """Basis sized by the energy rule applied to each POD/PSD sub-problem of ``method``."""
    lay = snap.layout

    def k_of(M):
        return pod_energy_rank(np.linalg.svd(M, compute_uv=False), fraction)

    if method == "global-pod":
        return global_pod(snap, k_of(snap.X))
    if method == "cw-pod":
        return componentwise_pod(snap, k_of(snap.X_q), k_of(snap.X_v))
    if method == "pod-fixed-solid":
        return pod_fixed_solid(snap, k_of(snap.X_e))
    if method == "cw-pod-fixed-solid":
        return componentwise_pod_fixed_solid(snap, k_of(snap.rows(lay.q_e)), k_of(snap.rows(lay.v_e)))
    if method == "gpsd":
        return gpsd(snap, 2 * k_of(snap.X_q + 1j * snap.X_v))
    if method == "psd-fixed-solid":
        return psd_fixed_solid(snap, 2 * k_of(snap.rows(lay.q_e) + 1j * snap.rows(lay.v_e)))
    raise ValueError(f"unknown forward method {method!r}")


def galerkin_project(sys, basis):
    V = basis.V if isinstance(basis, ReducedBasis) else np.asarray(basis)
    E_N = V.T @ sys.E @ V
    LUSolver(E_N)  # raises if the reduced mass is singular
    F = getattr(sys, "F", None)
    F_N = V.T @ F if F is not None else np.zeros(V.shape[1])
    x0 = getattr(sys, "x0", None)
    x0_N = V.T @ x0 if x0 is not None else np.zeros(V.shape[1])
    if not isinstance(basis, ReducedBasis):
        basis = ReducedBasis(V, "custom", sys.layout)
    return ReducedForwardModel(E_N, V.T @ sys.A @ V, V.T @ sys.B, F_N, x0_N, basis)


def relative_error(X, X_hat):
    nx = np.linalg.norm(X)
    if nx == 0:
        raise ValueError("reference matrix is zero")
    return float(np.linalg.norm(X - X_hat) / nx)


def reconstruct_and_error(V, X_r, X):
    X_hat = np.asarray(V) @ np.asarray(X_r)
    return X_hat, relative_error(X, X_hat)
