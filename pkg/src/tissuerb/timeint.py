"""Implicit midpoint rule for linear descriptor systems E x' = A x + B u(t) + F(t)."""
from dataclasses import dataclass

import numpy as np

from .numerics import LUSolver


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_t: int

    def __post_init__(self):
        if self.n_t < 1 or not self.T > 0:
            raise ValueError(f"invalid time grid T={self.T}, n_t={self.n_t}")

    @property
    def dt(self):
        return self.T / self.n_t

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.n_t + 1)

    @property
    def midpoints(self):
        return (np.arange(self.n_t) + 0.5) * self.dt

    def halved(self):
        return TimeGrid(self.T, 2 * self.n_t)


@dataclass
class Trajectory:
    X: np.ndarray  # (dim, n_t + 1), column 0 is the initial state
    grid: TimeGrid

    @property
    def snapshots(self):
        """States at t_1..t_{n_t}; the initial state is not a snapshot."""
        return self.X[:, 1:]

    @property
    def final(self):
        return self.X[:, -1]


def sample_midpoints(f, grid, rows):
    """Evaluate ``f`` on the step midpoints.

    ``f`` may be None (zeros), a constant vector, a callable of a time array
    returning (rows, n) or a callable of a scalar returning (rows,), or an
    already sampled (rows, n_t) array.
    """
    n_t = grid.n_t
    if f is None:
        return np.zeros((rows, n_t))
    if callable(f):
        tm = grid.midpoints
        try:
            out = np.asarray(f(tm), dtype=float)
            if out.shape != (rows, n_t):
                raise ValueError
        except (ValueError, TypeError):
            out = np.column_stack([np.asarray(f(t), dtype=float).reshape(rows) for t in tm])
    else:
        out = np.asarray(f, dtype=float)
        if out.ndim == 1:
            out = np.repeat(out.reshape(rows, 1), n_t, axis=1)
    if out.shape != (rows, n_t):
        raise ValueError(f"input samples have shape {out.shape}, expected {(rows, n_t)}")
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite input samples")
    return out


def implicit_midpoint(sys, grid, x0=None, u=None, F=None):
    """Integrate ``sys`` (anything with E, A, B) on ``grid``.

    Each step solves (E - dt/2 A) x_{k+1} = (E + dt/2 A) x_k + dt (B u + F)
    with u and F sampled at t_k + dt/2. The step matrix is factorised once.
    """
    E, A = np.asarray(sys.E), np.asarray(sys.A)
    B = getattr(sys, "B", None)
    dim = E.shape[0]
    dt = grid.dt
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    if F is None:
        F = getattr(sys, "F", None)

    forcing = sample_midpoints(F, grid, dim)
    if u is not None and B is not None and B.shape[1] > 0:
        forcing = forcing + B @ sample_midpoints(u, grid, B.shape[1])
    forcing *= dt

    lu = LUSolver(E - 0.5 * dt * A)
    rhs_op = E + 0.5 * dt * A
    X = np.empty((dim, grid.n_t + 1))
    X[:, 0] = x0
    x = x0
    for k in range(grid.n_t):
        x = lu.solve(rhs_op @ x + forcing[:, k])
        X[:, k + 1] = x
    return Trajectory(X, grid)
