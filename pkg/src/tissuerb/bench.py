"""Forward and LQR experiment drivers: FOM runs, method x size sweeps, timing, CSV records."""
from dataclasses import dataclass, fields
import csv
import logging
import math
import statistics
import time

import numpy as np

from . import coupled, fem, lqr, mor_forward, mor_lqr
from .numerics import SizeNotRealisable, StabilizabilityError, numerical_rank
from .timeint import TimeGrid, implicit_midpoint, sample_midpoints

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario", "method", "N_V", "error", "t_fom_s", "t_rom_offline_s",
               "t_rom_online_s", "speedup", "residual", "margin", "status")

# reference timings measured on other hardware; printed next to ours, never asserted
REFERENCE_TIMINGS = {
    "forward": {"fom_s": 16.22, "rom_s": (0.097, 0.101), "dim": 1916},
    "lqr": {"fom_s": 84.53, "rom_s": (0.051, 0.057), "dim": 880},
}


@dataclass
class RunRecord:
    scenario: str
    method: str
    N_V: int
    error: float = math.nan
    t_fom_s: float = math.nan
    t_rom_offline_s: float = math.nan
    t_rom_online_s: float = math.nan
    speedup: float = math.nan
    residual: float = math.nan
    margin: float = math.nan
    status: str = "ok"

    @property
    def failed(self):
        return self.status.startswith("error:")

    def row(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append(f"{v:.6e}" if isinstance(v, float) else str(v))
        return out


def median_time(fn, repeats):
    """Median wall time of ``fn()`` over ``repeats`` calls; also returns the last result."""
    times, result = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def build_system(cfg, scenario):
    """Coupled model and first-order system for ``scenario`` in {'forward', 'lqr'}."""
    mesh = fem.build_mesh(cfg.nx, cfg.ny)
    asm = fem.assemble(mesh, fem.MaterialParams(cfg.lam, cfg.mu, cfg.rho))
    load = fem.body_force(mesh, cfg.gravity) if any(cfg.gravity) else None
    damping = cfg.forward_damping if scenario == "forward" else cfg.lqr_damping
    c = coupled.build_coupled(asm, coupled.SolidParams(cfg.solid_mass), load=load, damping=damping)
    return c, coupled.to_first_order(c)


# ---------------------------------------------------------------- forward

@dataclass
class ForwardFom:
    coupled: object
    sys: object
    grid: TimeGrid
    u_samples: np.ndarray
    traj: object
    t_online: float


def forward_fom(cfg):
    c, sys = build_system(cfg, "forward")
    grid = TimeGrid(cfg.T_forward, cfg.n_t)
    u = sample_midpoints(coupled.minimum_jerk_input(c, cfg.target, cfg.T_forward), grid, c.m)
    reps = cfg.timing_repeats if cfg.timing else 1
    t, traj = median_time(lambda: implicit_midpoint(sys, grid, u=u), reps)
    return ForwardFom(c, sys, grid, u, traj, t if cfg.timing else math.nan)


def forward_rom_run(fom, method, N=None, energy=0.999, timing=True, repeats=5):
    """One forward ROM: build basis (offline), integrate (online), reconstruct, measure.

    Raises SizeNotRealisable if ``method`` cannot produce a basis of size N.
    """
    snap = mor_forward.SnapshotSet(fom.traj.snapshots, fom.sys.layout)
    rec = RunRecord("forward", method, -1 if N is None else int(N), t_fom_s=fom.t_online)
    try:
        t0 = time.perf_counter()
        if N is None:
            basis = mor_forward.basis_by_energy(method, snap, energy)
        else:
            basis = mor_forward.basis_for_size(method, snap, N)
        rom = mor_forward.galerkin_project(fom.sys, basis)
        t_off = time.perf_counter() - t0
        rec.N_V = basis.N
        reps = repeats if timing else 1
        t_on, rtraj = median_time(lambda: implicit_midpoint(rom, fom.grid, u=fom.u_samples), reps)
        _, rec.error = mor_forward.reconstruct_and_error(basis.V, rtraj.snapshots, fom.traj.snapshots)
        if timing:
            rec.t_rom_offline_s, rec.t_rom_online_s = t_off, t_on
            rec.speedup = fom.t_online / t_on
        if not np.isfinite(rec.error) or rec.error > 1.0:
            rec.status = "flagged:error>100%"
    except SizeNotRealisable:
        raise
    except (ValueError, np.linalg.LinAlgError) as exc:
        rec.status = f"error: {exc}"
    return rec


def forward_sweep(cfg, fom=None):
    """All configured forward methods at the configured sizes (or the energy rule)."""
    fom = fom or forward_fom(cfg)
    sizes = [None] if cfg.sizes is None else cfg.sizes
    records = []
    for method in cfg.forward_methods:
        for N in sizes:
            try:
                rec = forward_rom_run(fom, method, N, cfg.energy, cfg.timing, cfg.timing_repeats)
            except SizeNotRealisable as exc:
                log.info("skip %s N=%s: %s", method, N, exc)
                continue
            records.append(rec)
    return fom, records


def snapshot_rank(fom):
    return numerical_rank(np.linalg.svd(fom.traj.snapshots, compute_uv=False))


# ---------------------------------------------------------------- LQR

@dataclass
class LqrFom:
    coupled: object
    sys: object
    weights: lqr.CostWeights
    solution: lqr.ARESolution
    x_bar: np.ndarray
    u_bar: np.ndarray
    t_online: float


def lqr_fom(cfg):
    c, sys = build_system(cfg, "lqr")
    w = lqr.CostWeights.identity(sys.C.shape[0], c.m, cfg.q_scale, cfg.r_scale)
    reps = cfg.timing_repeats if cfg.timing else 1
    t, sol = median_time(lambda: lqr.solve_gare_dense(sys.E, sys.A, sys.B, sys.C, w), reps)
    sol.Z = lqr.low_rank_factor(sol.P, 1e-12)
    x_bar, u_bar = coupled.equilibrium_for_target(c, cfg.target)
    return LqrFom(c, sys, w, sol, x_bar, u_bar, t if cfg.timing else math.nan)


def lqr_closed_loop(fom, K, T, n_t):
    """Full-order closed loop from x(0) = 0 toward the target; returns (traj, outputs)."""
    return lqr.closed_loop_simulate(fom.sys, K, fom.x_bar, fom.u_bar, TimeGrid(T, n_t))


def lqr_rom_run(fom, method, N, timing=True, repeats=5, closed_loop=True):
    """One RB-ARE run; returns (record, ReducedAre or None). Raises SizeNotRealisable."""
    rec = RunRecord("lqr", method, int(N), t_fom_s=fom.t_online)
    P = fom.solution.P
    red = None
    try:
        t0 = time.perf_counter()
        basis = mor_lqr.are_basis_for_size(method, P, fom.sys, N)
        t_off = time.perf_counter() - t0
        reps = repeats if timing else 1
        t_on, red = median_time(lambda: mor_lqr.solve_reduced_are(fom.sys, fom.weights, basis), reps)
        rec.error = mor_lqr.rb_are_error(P, red.P_hat)
        rec.residual = red.residual
        if timing:
            rec.t_rom_offline_s, rec.t_rom_online_s = t_off, t_on
            rec.speedup = fom.t_online / t_on
        if closed_loop:
            rec.margin = mor_lqr.full_order_margin(fom.sys, red.K_hat)
        if rec.error > 1.0:
            rec.status = "flagged:error>100%"
        elif closed_loop and rec.margin <= 0:
            rec.status = "unstable-closed-loop"
    except SizeNotRealisable:
        raise
    except StabilizabilityError as exc:
        # an expected outcome for small or badly chosen bases, not a run failure
        rec.status = f"not-stabilizable: {exc}"
    except (ValueError, np.linalg.LinAlgError) as exc:
        rec.status = f"error: {exc}"
    return rec, red


def lqr_sweep(cfg, fom=None):
    fom = fom or lqr_fom(cfg)
    sizes = [8] if cfg.sizes is None else cfg.sizes
    records = []
    for method in cfg.are_methods:
        for N in sizes:
            try:
                rec, _ = lqr_rom_run(fom, method, N, cfg.timing, cfg.timing_repeats, cfg.closed_loop)
            except SizeNotRealisable as exc:
                log.info("skip %s N=%s: %s", method, N, exc)
                continue
            records.append(rec)
    return fom, records


# ---------------------------------------------------------------- output

def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())


def read_records(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for f in fields(RunRecord):
                v = row[f.name]
                if f.name == "N_V":
                    kw[f.name] = int(v)
                elif f.name in ("scenario", "method", "status"):
                    kw[f.name] = v
                else:
                    kw[f.name] = float(v)
            out.append(RunRecord(**kw))
    return out
