"""Dense linear-algebra kernels shared by the model, integrator, reduction and control code.

Everything here is a thin, checked layer over numpy/scipy LAPACK wrappers.
"""
from dataclasses import dataclass
import warnings

import numpy as np
import scipy.linalg as la

# Singular values below this fraction of the largest are treated as zero.
RANK_RTOL = 1e-12


class SizeNotRealisable(ValueError):
    """A requested basis size cannot be built by the chosen method."""


class StabilizabilityError(np.linalg.LinAlgError):
    """Raised when a Hamiltonian spectrum touches the imaginary axis."""


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite entries in input matrix")


@dataclass
class SvdResult:
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray


def truncated_svd(X, k):
    """Leading ``k`` singular triplets of ``X``."""
    X = np.asarray(X)
    _require_finite(X)
    if X.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    kmax = min(X.shape)
    if not 1 <= k <= kmax:
        raise ValueError(f"rank {k} out of range [1, {kmax}]")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return SvdResult(U[:, :k], s[:k], Vt[:k])


def numerical_rank(s, rtol=RANK_RTOL):
    s = np.asarray(s)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def sym_eig(S, tol=1e-10):
    """Eigen-decomposition of a symmetric matrix, eigenvalues in descending order."""
    S = np.asarray(S, dtype=float)
    _require_finite(S)
    nrm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > tol * nrm:
        raise ValueError("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    return w[::-1], Q[:, ::-1]


def _schur_eigenvalues(T):
    """Eigenvalues read off the 1x1/2x2 diagonal blocks of a real Schur form."""
    n = T.shape[0]
    out = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            out[i:i + 2] = np.linalg.eigvals(T[i:i + 2, i:i + 2])
            i += 2
        else:
            out[i] = T[i, i]
            i += 1
    return out


def ordered_schur_stable_subspace(H, dim, axis_tol=1e-10):
    """Orthonormal basis of the invariant subspace of ``H`` for eigenvalues with Re < 0.

    An eigenvalue counts as lying on the imaginary axis when
    ``|Re(lambda)| <= axis_tol * max(1, |lambda|)``; any such eigenvalue, or a
    stable count different from ``dim``, raises :class:`StabilizabilityError`.
    """
    H = np.asarray(H, dtype=float)
    _require_finite(H)
    if H.shape != (2 * dim, 2 * dim):
        raise ValueError(f"expected a {2 * dim}x{2 * dim} matrix, got {H.shape}")
    T, Z, sdim = la.schur(H, output="real", sort="lhp")
    eigs = _schur_eigenvalues(T)
    on_axis = np.abs(eigs.real) <= axis_tol * np.maximum(1.0, np.abs(eigs))
    if np.any(on_axis):
        worst = eigs[on_axis][np.argmin(np.abs(eigs[on_axis].real))]
        raise StabilizabilityError(
            f"{int(on_axis.sum())} eigenvalue(s) on the imaginary axis, e.g. {worst:.3e}")
    if sdim != dim:
        raise StabilizabilityError(f"stable subspace has dimension {sdim}, expected {dim}")
    return Z[:, :dim]


def spd_sqrt_and_inv_sqrt(W, rtol=1e-12):
    """Symmetric square root of an SPD matrix and its inverse."""
    w, Q = sym_eig(W)
    if w[-1] <= rtol * w[0]:
        raise np.linalg.LinAlgError(
            f"matrix is not (numerically) positive definite: smallest eigenvalue {w[-1]:.3e}")
    r = np.sqrt(w)
    return (Q * r) @ Q.T, (Q / r) @ Q.T


class LUSolver:
    """LU factorisation that can be reused for many right-hand sides."""

    def __init__(self, S, max_cond=1e14):
        S = np.asarray(S, dtype=float)
        _require_finite(S)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("expected a square matrix")
        self.shape = S.shape
        anorm = np.linalg.norm(S, 1)
        with warnings.catch_warnings():
            # singularity is judged by the rcond check below
            warnings.simplefilter("ignore", la.LinAlgWarning)
            self._lu = la.lu_factor(S, check_finite=False)
        if anorm == 0.0:
            raise np.linalg.LinAlgError("matrix is zero")
        rcond, info = la.lapack.dgecon(self._lu[0], anorm, norm="1")
        if info != 0 or rcond * max_cond < 1.0:
            raise np.linalg.LinAlgError(
                f"matrix is singular to working precision (rcond={rcond:.2e})")
        self.rcond = rcond

    def solve(self, rhs, trans=0):
        return la.lu_solve(self._lu, rhs, trans=trans, check_finite=False)


def factorize_and_solve(S, rhs):
    return LUSolver(S).solve(np.asarray(rhs, dtype=float))
