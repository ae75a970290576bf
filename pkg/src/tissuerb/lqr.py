"""LQR for descriptor systems: dense generalized ARE, gain, low-rank factor, closed loop."""
from dataclasses import dataclass
import logging
from types import SimpleNamespace

import numpy as np
import scipy.linalg as la

from .numerics import (LUSolver, StabilizabilityError, ordered_schur_stable_subspace,
                       sym_eig)
from .timeint import Trajectory, implicit_midpoint

log = logging.getLogger(__name__)


@dataclass
class CostWeights:
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        for name, W in (("Q", self.Q), ("R", self.R)):
            if np.linalg.norm(W - W.T) > 1e-12 * max(np.linalg.norm(W), 1.0):
                raise ValueError(f"{name} is not symmetric")
        if np.linalg.eigvalsh(self.Q)[0] < -1e-12 * max(np.abs(self.Q).max(), 1.0):
            raise ValueError("Q is not positive semi-definite")
        try:
            np.linalg.cholesky(self.R)
        except np.linalg.LinAlgError as exc:
            raise ValueError("R is not positive definite") from exc

    @classmethod
    def identity(cls, p, m, q_scale=1.0, r_scale=1.0):
        return cls(q_scale * np.eye(p), r_scale * np.eye(m))


@dataclass
class ARESolution:
    P: np.ndarray
    K_f: np.ndarray
    residual: float
    closed_loop_eigs: np.ndarray
    Z: np.ndarray = None

    @property
    def stability_margin(self):
        return float(-self.closed_loop_eigs.real.max())


def _gare_lhs(E, A, B, CQC, R, P):
    PE = P @ E
    BtPE = B.T @ PE
    lhs = E.T @ P @ A
    return lhs + lhs.T - BtPE.T @ la.solve(R, BtPE, assume_a="pos") + CQC


def gare_residual(E, A, B, C, w, P):
    """Relative Frobenius residual of E'PA + A'PE - E'PBR^-1B'PE + C'QC, scaled by |C'QC|."""
    CQC = C.T @ w.Q @ C
    return float(np.linalg.norm(_gare_lhs(E, A, B, CQC, w.R, P)) / np.linalg.norm(CQC))


def solve_gare_dense(E, A, B, C, w, refine_tol=1e-13, max_refine=6, factor_tol=None):
    """Stabilising solution of the generalized ARE by the Hamiltonian Schur method.

    The descriptor problem is mapped to a standard one with A~ = E^-1 A,
    B~ = E^-1 B; its solution X = E'PE comes from the stable invariant
    subspace of [[A~, -G], [-C'QC, -A~']], G = B~ R^-1 B~', and P = E^-T X E^-1.

    E^-1 A is stiff for FEM models, which caps the accuracy of the Schur
    solution (relative residual ~1e-6 at 2n = 880). P is therefore polished by
    Newton steps whose residual is evaluated with E, A directly; only the
    correction goes through a closed-loop Lyapunov solve.
    """
    E, A, B, C = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (E, A, B, C))
    n = E.shape[0]
    Elu = LUSolver(E)
    At = Elu.solve(A)
    Bt = Elu.solve(B)
    RinvBt = la.solve(w.R, Bt.T, assume_a="pos")
    G = Bt @ RinvBt
    G = 0.5 * (G + G.T)
    CQC = C.T @ w.Q @ C
    CQC = 0.5 * (CQC + CQC.T)

    H = np.block([[At, -G], [-CQC, -At.T]])
    U = ordered_schur_stable_subspace(H, n)
    U1, U2 = U[:n], U[n:]
    X = LUSolver(U1).solve(U2.T, trans=1).T

    def to_P(Xs):
        Y = Elu.solve(Xs, trans=1)           # E^-T Xs
        Y = Elu.solve(Y.T, trans=1).T        # E^-T Xs E^-1
        return 0.5 * (Y + Y.T)

    qn = max(np.linalg.norm(CQC), np.finfo(float).tiny)
    P = to_P(X)
    lhs = _gare_lhs(E, A, B, CQC, w.R, P)
    res = np.linalg.norm(lhs) / qn
    for _ in range(max_refine):
        if res <= refine_tol:
            break
        # A_cl' dP E + E' dP A_cl = -lhs  <=>  At_cl' dX + dX At_cl = -lhs, dX = E' dP E
        Acl = At - G @ (E.T @ P @ E)
        dX = la.solve_continuous_lyapunov(Acl.T, -lhs)
        Pn = P + to_P(dX)
        lhs_n = _gare_lhs(E, A, B, CQC, w.R, Pn)
        rn = np.linalg.norm(lhs_n) / qn
        if not rn < res:
            break
        P, lhs, res = Pn, lhs_n, rn
    log.debug("generalized ARE residual %.3e", res)

    K_f = -RinvBt @ (E.T @ P @ E)            # = -R^-1 B' P E
    cl = np.linalg.eigvals(At + Bt @ K_f)
    if np.any(cl.real >= 0):
        worst = cl[np.argmax(cl.real)]
        raise StabilizabilityError(f"closed loop is not stable: eigenvalue {worst:.3e}")

    sol = ARESolution(P, K_f, float(res), cl)
    if factor_tol is not None:
        sol.Z = low_rank_factor(P, factor_tol)
    return sol


def low_rank_factor(P, tol=1e-12, neg_tol=1e-8):
    """Z with ZZ' ~ P from the leading eigenpairs.

    Keeps the smallest k with sum_{i>k} lambda_i <= tol * sum lambda_i
    (over the nonnegative part of the spectrum).
    """
    lam, Q = sym_eig(P, tol=1e-9)
    if lam[0] <= 0:
        if lam[0] == 0:
            return np.zeros((P.shape[0], 0))
        raise ValueError("matrix has no positive spectrum")
    if lam[-1] < -neg_tol * lam[0]:
        raise ValueError(f"matrix is significantly indefinite: eigenvalue {lam[-1]:.3e}")
    lam = np.clip(lam, 0.0, None)
    tail = np.concatenate([np.cumsum(lam[::-1])[::-1][1:], [0.0]])
    k = int(np.argmax(tail <= tol * lam.sum())) + 1
    return Q[:, :k] * np.sqrt(lam[:k])


def closed_loop_simulate(sys, K_f, x_bar, u_bar, grid, x0=None, blowup=1e6):
    """Simulate E x' = A x + B (u_bar + K_f (x - x_bar)) + F with the midpoint rule.

    Returns the trajectory and the output history C x (p, n_t + 1).
    """
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.atleast_1d(np.asarray(u_bar, dtype=float))
    F = sys.F if getattr(sys, "F", None) is not None else np.zeros(sys.dim)

    closed = SimpleNamespace(E=sys.E, A=sys.A + sys.B @ K_f, B=None)
    Fcl = F + sys.B @ (u_bar - K_f @ x_bar)
    x0 = np.zeros(sys.dim) if x0 is None else np.asarray(x0, dtype=float)
    traj = implicit_midpoint(closed, grid, x0=x0, F=Fcl)
    scale = max(np.linalg.norm(x0), np.linalg.norm(x_bar), 1.0)
    if not np.all(np.isfinite(traj.X)) or np.abs(traj.X).max() > blowup * scale:
        raise StabilizabilityError("closed-loop state norm blew up: feedback does not stabilise")
    return Trajectory(traj.X, grid), sys.C @ traj.X


def closed_loop_eigenvalues(sys, K_f):
    """Generalized eigenvalues of (A + B K_f, E)."""
    return la.eigvals(sys.A + sys.B @ K_f, sys.E)
