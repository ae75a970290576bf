"""One-way coupled rigid hand / elastic tissue model and its first-order descriptor form.

The hand is a rigid body with ``n_s = 2`` translational dofs. The Dirichlet
nodes of the tissue follow the hand rigidly, which produces the coupling
blocks ``M_es`` and ``K_es``; the tissue does not act back on the hand.
"""
from dataclasses import dataclass, field

import numpy as np

from .numerics import LUSolver


@dataclass(frozen=True)
class SolidParams:
    mass: float = 100.0
    n_s: int = 2

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("solid mass must be positive")
        if self.n_s != 2:
            raise ValueError("only the two translational hand dofs are supported")

    @property
    def B_us(self):
        return np.eye(self.n_s)


@dataclass
class CoupledSecondOrder:
    M_ss: np.ndarray
    M_es: np.ndarray
    M_ee: np.ndarray
    K_es: np.ndarray
    K_ee: np.ndarray
    B_us: np.ndarray
    f_s: np.ndarray
    f_e: np.ndarray
    D_es: np.ndarray
    D_ee: np.ndarray
    lifting: np.ndarray
    assembly: object = field(repr=False, default=None)

    @property
    def n_s(self):
        return self.M_ss.shape[0]

    @property
    def n_e(self):
        return self.M_ee.shape[0]

    @property
    def n(self):
        return self.n_s + self.n_e

    @property
    def m(self):
        return self.B_us.shape[1]


@dataclass(frozen=True)
class StateLayout:
    """Index bookkeeping for x = [q_s, v_s, q_e, v_e]."""

    n_s: int
    n_e: int

    @property
    def dim(self):
        return 2 * (self.n_s + self.n_e)

    @property
    def q_s(self):
        return np.arange(0, self.n_s)

    @property
    def v_s(self):
        return np.arange(self.n_s, 2 * self.n_s)

    @property
    def q_e(self):
        return np.arange(2 * self.n_s, 2 * self.n_s + self.n_e)

    @property
    def v_e(self):
        return np.arange(2 * self.n_s + self.n_e, self.dim)

    @property
    def solid(self):
        return np.arange(0, 2 * self.n_s)

    @property
    def elastic(self):
        return np.arange(2 * self.n_s, self.dim)

    @property
    def q(self):
        return np.concatenate([self.q_s, self.q_e])

    @property
    def v(self):
        return np.concatenate([self.v_s, self.v_e])

    def poisson_matrix(self):
        """Canonical J with J[q_i, v_i] = 1 and J[v_i, q_i] = -1."""
        return poisson_matrix(self.q, self.v, self.dim)


def poisson_matrix(q_idx, v_idx, dim):
    J = np.zeros((dim, dim))
    J[q_idx, v_idx] = 1.0
    J[v_idx, q_idx] = -1.0
    return J


@dataclass
class FirstOrderSystem:
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: np.ndarray
    layout: StateLayout
    x0: np.ndarray = None
    output_node: int = None

    def __post_init__(self):
        if self.x0 is None:
            self.x0 = np.zeros(self.E.shape[0])

    @property
    def dim(self):
        return self.E.shape[0]


def lifting_map(mesh, n_s=2):
    """Rigid extension of the hand translation to every Dirichlet dof (node-wise I_2 stack)."""
    nd = mesh.dirichlet_nodes.size
    return np.tile(np.eye(n_s), (nd, 1))


def build_coupled(assembly, solid=SolidParams(), load=None, damping=(0.0, 0.0)):
    """Partition an unconstrained assembly into the one-way coupled block system.

    ``load`` is an optional global nodal load (all dofs); its free part becomes
    ``f_e``. ``damping = (alpha, beta)`` adds Rayleigh damping
    ``alpha*M + beta*K`` acting on the tissue rows only.
    """
    dofs = assembly.dofs
    if dofs.dirichlet.size == 0:
        raise ValueError("no Dirichlet nodes: coupling to the hand is undefined")
    fr, bd = dofs.free, dofs.dirichlet
    K, M = assembly.K, assembly.M
    L = lifting_map(assembly.mesh, solid.n_s)

    M_ee = M[np.ix_(fr, fr)]
    K_ee = K[np.ix_(fr, fr)]
    M_es = M[np.ix_(fr, bd)] @ L
    K_es = K[np.ix_(fr, bd)] @ L
    alpha, beta = damping
    f_e = np.zeros(fr.size) if load is None else np.asarray(load, dtype=float)[fr]
    return CoupledSecondOrder(
        M_ss=solid.mass * np.eye(solid.n_s),
        M_es=M_es, M_ee=M_ee, K_es=K_es, K_ee=K_ee,
        B_us=solid.B_us,
        f_s=np.zeros(solid.n_s), f_e=f_e,
        D_es=alpha * M_es + beta * K_es,
        D_ee=alpha * M_ee + beta * K_ee,
        lifting=L, assembly=assembly,
    )


def default_output_node(mesh, dofs):
    """Free node closest to the bottom centre of the tissue."""
    target = np.array([0.5 * mesh.lx, 0.0])
    d = np.linalg.norm(mesh.coords - target, axis=1)
    d[mesh.dirichlet_nodes] = np.inf
    return int(np.argmin(d))


def to_first_order(c, output_node=None):
    """Descriptor form E x' = A x + B u + F with x = [q_s, v_s, q_e, v_e].

    C picks the (u_x, u_y) displacement of one free tissue node.
    """
    ns, ne = c.n_s, c.n_e
    lay = StateLayout(ns, ne)
    N = lay.dim
    qs, vs, qe, ve = lay.q_s, lay.v_s, lay.q_e, lay.v_e

    E = np.zeros((N, N))
    E[qs, qs] = 1.0
    E[np.ix_(vs, vs)] = c.M_ss
    E[qe, qe] = 1.0
    E[np.ix_(ve, vs)] = c.M_es
    E[np.ix_(ve, ve)] = c.M_ee

    A = np.zeros((N, N))
    A[qs, vs] = 1.0
    A[qe, ve] = 1.0
    A[np.ix_(ve, qs)] = -c.K_es
    A[np.ix_(ve, vs)] = -c.D_es
    A[np.ix_(ve, qe)] = -c.K_ee
    A[np.ix_(ve, ve)] = -c.D_ee

    B = np.zeros((N, c.m))
    B[vs] = c.B_us

    F = np.zeros(N)
    F[vs] = c.f_s
    F[ve] = c.f_e

    mesh, dofs = c.assembly.mesh, c.assembly.dofs
    if output_node is None:
        output_node = default_output_node(mesh, dofs)
    pos = dofs.free_position[[2 * output_node, 2 * output_node + 1]]
    if np.any(pos < 0):
        raise ValueError(f"observation node {output_node} is a Dirichlet node")
    C = np.zeros((2, N))
    C[0, qe[pos[0]]] = 1.0
    C[1, qe[pos[1]]] = 1.0
    return FirstOrderSystem(E, A, B, C, F, lay, output_node=int(output_node))


def equilibrium_for_target(c, target_solid, rtol=1e-9):
    """Steady state with the hand held at ``target_solid``.

    Returns the full state ``x_bar`` (zero velocities, tissue in static
    equilibrium with the displaced boundary and the load) and the
    feed-forward input ``u_bar`` balancing the hand load.
    """
    qs = np.asarray(target_solid, dtype=float)
    qe = LUSolver(c.K_ee).solve(c.f_e - c.K_es @ qs)
    u_bar, *_ = np.linalg.lstsq(c.B_us, -c.f_s, rcond=None)
    if np.linalg.norm(c.B_us @ u_bar + c.f_s) > rtol * max(1.0, np.linalg.norm(c.f_s)):
        raise ValueError("hand load is not in the range of the actuation map")
    lay = StateLayout(c.n_s, c.n_e)
    x = np.zeros(lay.dim)
    x[lay.q_s] = qs
    x[lay.q_e] = qe
    return x, u_bar


def minimum_jerk_input(c, target_solid, T):
    """Input that moves the hand along a quintic 0 -> target over [0, T], then holds.

    Inverse dynamics on the hand: B_us u = M_ss q''_des - f_s.
    """
    target = np.asarray(target_solid, dtype=float)
    Binv = np.linalg.pinv(c.B_us)

    def u(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tau = np.clip(t / T, 0.0, 1.0)
        acc = (60 * tau - 180 * tau**2 + 120 * tau**3) / T**2
        acc = np.where(t <= T, acc, 0.0)
        rhs = (c.M_ss @ target)[:, None] * acc[None, :] - c.f_s[:, None]
        return Binv @ rhs

    return u


def minimum_jerk_position(target_solid, T, t):
    tau = np.clip(np.asarray(t, dtype=float) / T, 0.0, 1.0)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    return np.asarray(target_solid, dtype=float)[:, None] * np.atleast_1d(s)[None, :]
