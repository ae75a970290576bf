"""Reduced-basis ARE: bases from the dense Riccati solution P and the projected ARE.

Block names follow the state ordering x = [q_s, v_s, q_e, v_e]: ``P_es`` is
P[elastic rows, solid cols]; inside each block index 1 means displacement
and 2 velocity, so ``P_ee12 = P[q_e, v_e]``.
"""
from dataclasses import dataclass, field
import time

import numpy as np

from .lqr import closed_loop_eigenvalues, solve_gare_dense
from .mor_forward import pod
from .numerics import SizeNotRealisable, spd_sqrt_and_inv_sqrt

ARE_METHODS = ("pod-of-P", "weighted-pod", "pod-fixed-solid-P", "cw-pod-P", "pod-decomposed-P")


@dataclass
class RbAreBasis:
    V: np.ndarray
    method: str
    layout: object
    n_fixed: int = 0
    W: np.ndarray = field(default=None, repr=False)

    @property
    def N(self):
        return self.V.shape[1]

    def orthonormality_residual(self):
        """|V'V - I| (or |V'WV - I| for the weighted basis)."""
        G = self.V.T @ self.V if self.W is None else self.V.T @ self.W @ self.V
        return float(np.linalg.norm(G - np.eye(self.N)))


@dataclass
class ReducedAre:
    E_N: np.ndarray
    A_N: np.ndarray
    B_N: np.ndarray
    C_N: np.ndarray
    P_N: np.ndarray
    P_hat: np.ndarray
    K_hat: np.ndarray
    residual: float
    basis: RbAreBasis
    solve_time: float = 0.0


def _with_fixed_solid(layout, Ve, method):
    ns2 = 2 * layout.n_s
    V = np.zeros((layout.dim, ns2 + Ve.shape[1]))
    V[layout.solid, :ns2] = np.eye(ns2)
    V[layout.elastic, ns2:] = Ve
    return RbAreBasis(V, method, layout, n_fixed=ns2)


def pod_of_P(P, k, layout):
    V, _ = pod(P, k)
    return RbAreBasis(V, "pod-of-P", layout)


def weighted_pod_of_P(P, E, k, layout):
    """V = W^{-1/2} POD_k(W^{1/2} P) with W = (E + E')/2; V is W-orthonormal."""
    W = 0.5 * (E + E.T)
    Wh, Wih = spd_sqrt_and_inv_sqrt(W)
    U, _ = pod(Wh @ P, k)
    return RbAreBasis(Wih @ U, "weighted-pod", layout, W=W)


def pod_fixed_solid_P(P, k, layout):
    Ve, _ = pod(P[layout.elastic], k)  # [P_es, P_ee]
    return _with_fixed_solid(layout, Ve, "pod-fixed-solid-P")


def componentwise_pod_P(P, k1, k2, layout):
    qs, qe, ve = layout.q_s, layout.q_e, layout.v_e
    Vq, _ = pod(np.hstack([P[np.ix_(qe, qs)], P[np.ix_(qe, qe)], P[np.ix_(qe, ve)]]), k1)
    Vv, _ = pod(np.hstack([P[np.ix_(ve, qs)], P[np.ix_(ve, qe)], P[np.ix_(ve, ve)]]), k2)
    ne = layout.n_e
    Ve = np.zeros((2 * ne, k1 + k2))
    Ve[:ne, :k1] = Vq
    Ve[ne:, k1:] = Vv
    return _with_fixed_solid(layout, Ve, "cw-pod-P")


def pod_decomposed_P(P, k1, layout):
    """One basis V1 from all four elastic sub-blocks, used for both q_e and v_e."""
    qe, ve = layout.q_e, layout.v_e
    blocks = [P[np.ix_(a, b)] for a in (qe, ve) for b in (qe, ve)]
    V1, _ = pod(np.hstack(blocks), k1)
    ne = layout.n_e
    Ve = np.zeros((2 * ne, 2 * k1))
    Ve[:ne, :k1] = V1
    Ve[ne:, k1:] = V1
    return _with_fixed_solid(layout, Ve, "pod-decomposed-P")


def are_basis_for_size(method, P, sys, N):
    """Basis of total size N for ``method``; raises ValueError if N is not realisable."""
    lay = sys.layout
    ns2 = 2 * lay.n_s
    if method == "pod-of-P":
        return pod_of_P(P, N, lay)
    if method == "weighted-pod":
        return weighted_pod_of_P(P, sys.E, N, lay)
    k = N - ns2
    if k < 1:
        raise SizeNotRealisable(f"{method} needs N > {ns2} (solid block is fixed)")
    if method == "pod-fixed-solid-P":
        return pod_fixed_solid_P(P, k, lay)
    if method == "cw-pod-P":
        if k < 2:
            raise SizeNotRealisable(f"{method} needs N >= {ns2 + 2}")
        return componentwise_pod_P(P, (k + 1) // 2, k // 2, lay)
    if method == "pod-decomposed-P":
        if k % 2:
            raise SizeNotRealisable(f"{method} needs N - {ns2} even")
        return pod_decomposed_P(P, k // 2, lay)
    raise ValueError(f"unknown RB-ARE method {method!r}")


def solve_reduced_are(sys, w, basis):
    """Galerkin-projected ARE; returns P_N, P_hat = V P_N V' and K_hat = -R^-1 B' P_hat E."""
    V = basis.V
    E_N, A_N = V.T @ sys.E @ V, V.T @ sys.A @ V
    B_N, C_N = V.T @ sys.B, sys.C @ V
    t0 = time.perf_counter()
    red = solve_gare_dense(E_N, A_N, B_N, C_N, w)
    elapsed = time.perf_counter() - t0
    P_hat = V @ red.P @ V.T
    P_hat = 0.5 * (P_hat + P_hat.T)
    K_hat = -np.linalg.solve(w.R, sys.B.T @ P_hat @ sys.E)
    return ReducedAre(E_N, A_N, B_N, C_N, red.P, P_hat, K_hat, red.residual, basis, elapsed)


def rb_are_error(P, P_hat):
    return float(np.linalg.norm(P - P_hat) / np.linalg.norm(P))


def full_order_margin(sys, K_hat):
    """-max Re of the full-order closed-loop spectrum under a reduced gain (> 0 means stable)."""
    return float(-closed_loop_eigenvalues(sys, K_hat).real.max())
