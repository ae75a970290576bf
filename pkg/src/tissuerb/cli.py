"""Command-line entry point: FOM runs, ROM sweeps, plots and matrix dumps."""
import argparse
import logging
import math
import os
import sys

# timings are taken single-threaded; must happen before numpy loads BLAS
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np  # noqa: E402

from . import bench, export, plots  # noqa: E402
from .config import ExperimentConfig  # noqa: E402

log = logging.getLogger("tissuerb")


def _pair(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return vals


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _str_list(text):
    return [v for v in text.split(",") if v]


def _common(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--solid-mass", type=float)
    p.add_argument("--forward-damping", type=_pair, metavar="ALPHA,BETA")
    p.add_argument("--lqr-damping", type=_pair, metavar="ALPHA,BETA")
    p.add_argument("--gravity", type=_pair, metavar="GX,GY")
    p.add_argument("--target", type=_pair, metavar="X,Y")
    p.add_argument("--q-scale", type=float)
    p.add_argument("--r-scale", type=float)
    p.add_argument("--n-t", type=int)
    p.add_argument("--T-forward", type=float)
    p.add_argument("--T-lqr", type=float)
    p.add_argument("--sizes", type=_int_list, help="comma-separated basis sizes")
    p.add_argument("--energy", type=float)
    p.add_argument("--repeats", dest="timing_repeats", type=int)
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                   help="skip timings (times written as nan; CSV becomes reproducible)")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


_OVERRIDES = ("output_dir", "nx", "ny", "lam", "mu", "rho", "solid_mass", "forward_damping",
              "lqr_damping", "gravity", "target", "q_scale", "r_scale", "n_t", "T_forward",
              "T_lqr", "sizes", "energy", "timing_repeats", "timing", "seed",
              "forward_methods", "are_methods", "closed_loop")


def load_config(args):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    return cfg.updated(**{k: getattr(args, k, None) for k in _OVERRIDES})


def _outdir(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _fmt(v):
    return "-" if isinstance(v, float) and math.isnan(v) else (f"{v:.3e}" if isinstance(v, float) else str(v))


def print_records(records, out=sys.stdout):
    cols = ("method", "N_V", "error", "t_rom_online_s", "speedup", "margin", "status")
    print("  ".join(f"{c:>18}" for c in cols), file=out)
    for r in records:
        print("  ".join(f"{_fmt(getattr(r, c)):>18}" for c in cols), file=out)


def _report_failures(records):
    bad = [r for r in records if r.failed]
    for r in bad:
        print(f"FAILED {r.scenario} {r.method} N_V={r.N_V}: {r.status}", file=sys.stderr)
    return 1 if bad else 0


def _reference_line(scenario, t_fom):
    ref = bench.REFERENCE_TIMINGS[scenario]
    print(f"reference timings (other hardware, dim {ref['dim']}): FOM {ref['fom_s']} s, "
          f"ROM {ref['rom_s'][0]}-{ref['rom_s'][1]} s; this run FOM {_fmt(t_fom)} s")


def cmd_forward_fom(cfg, args):
    out = _outdir(cfg)
    fom = bench.forward_fom(cfg)
    export.write_trajectory_csv(os.path.join(out, "forward_fom_trajectory.csv"), fom.traj)
    export.write_trajectory_csv(os.path.join(out, "forward_fom_output.csv"), fom.traj,
                                rows=fom.sys.C @ fom.traj.X)
    print(f"forward FOM: dim {fom.sys.dim}, {cfg.n_t} steps, t_online {_fmt(fom.t_online)} s, "
          f"snapshot rank {bench.snapshot_rank(fom)}")
    return 0


def cmd_forward_sweep(cfg, args):
    out = _outdir(cfg)
    fom, records = bench.forward_sweep(cfg)
    bench.write_records(os.path.join(out, "forward_results.csv"), records)
    print_records(records)
    _reference_line("forward", fom.t_online)
    return _report_failures(records)


def cmd_lqr_fom(cfg, args):
    out = _outdir(cfg)
    fom = bench.lqr_fom(cfg)
    sol = fom.solution
    export.write_mtx(os.path.join(out, "K_f.mtx"), sol.K_f, "full-order feedback gain")
    export.write_mtx(os.path.join(out, "Z.mtx"), sol.Z, "low-rank factor, Z Z' ~ P")
    traj, y = bench.lqr_closed_loop(fom, sol.K_f, cfg.T_lqr, cfg.n_t)
    export.write_trajectory_csv(os.path.join(out, "lqr_fom_output.csv"), traj, rows=y)
    export.write_manifest(os.path.join(out, "lqr_fom.json"), dim=fom.sys.dim,
                          residual=sol.residual, margin=sol.stability_margin,
                          t_online_s=fom.t_online, rank_Z=sol.Z.shape[1],
                          final_output=y[:, -1], target=list(cfg.target))
    print(f"LQR FOM: dim {fom.sys.dim}, residual {sol.residual:.2e}, margin "
          f"{sol.stability_margin:.3e}, rank(Z) {sol.Z.shape[1]}, t_online {_fmt(fom.t_online)} s")
    print(f"output at T={cfg.T_lqr}: {y[:, -1]}")
    return 0


def cmd_lqr_sweep(cfg, args):
    out = _outdir(cfg)
    fom, records = bench.lqr_sweep(cfg)
    bench.write_records(os.path.join(out, "lqr_results.csv"), records)
    print_records(records)
    _reference_line("lqr", fom.t_online)
    return _report_failures(records)


def cmd_plot(cfg, args):
    records = []
    for path in args.csv:
        records += bench.read_records(path)
    for p in plots.plot_records(records, _outdir(cfg)):
        print(p)
    return 0


def cmd_dump_matrices(cfg, args):
    out = _outdir(cfg)
    scenario = args.scenario
    c, sysm = bench.build_system(cfg, scenario)
    mats = {"E": sysm.E, "A": sysm.A, "B": sysm.B, "C": sysm.C, "M_ee": c.M_ee, "K_ee": c.K_ee,
            "M_es": c.M_es, "K_es": c.K_es, "D_ee": c.D_ee, "D_es": c.D_es}
    for name, M in mats.items():
        export.write_mtx(os.path.join(out, f"{name}.mtx"), M, f"{scenario} scenario")
    lay = sysm.layout
    export.write_manifest(
        os.path.join(out, "manifest.json"), scenario=scenario,
        state_order=["q_s", "v_s", "q_e", "v_e"], n_s=lay.n_s, n_e=lay.n_e, dim=lay.dim,
        blocks={k: [int(getattr(lay, k)[0]), int(getattr(lay, k)[-1]) + 1]
                for k in ("q_s", "v_s", "q_e", "v_e")},
        free_dofs=c.assembly.dofs.free, dirichlet_nodes=c.assembly.mesh.dirichlet_nodes,
        output_node=sysm.output_node, damping=list(
            cfg.forward_damping if scenario == "forward" else cfg.lqr_damping),
        files=sorted(f"{n}.mtx" for n in mats))
    print(f"wrote {len(mats)} matrices to {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="tissuerb", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
            ("forward-fom", cmd_forward_fom, "full-order forward simulation"),
            ("forward-sweep", cmd_forward_sweep, "forward ROM methods x basis sizes"),
            ("lqr-fom", cmd_lqr_fom, "dense Riccati solve and closed loop"),
            ("lqr-sweep", cmd_lqr_sweep, "RB-ARE methods x basis sizes"),
            ("plot", cmd_plot, "SVG error curves from result CSVs"),
            ("dump-matrices", cmd_dump_matrices, "write system matrices (Matrix Market)")):
        sp = sub.add_parser(name, help=help_)
        _common(sp)
        sp.set_defaults(func=fn)
        if name == "forward-sweep":
            sp.add_argument("--methods", dest="forward_methods", type=_str_list)
        if name == "lqr-sweep":
            sp.add_argument("--methods", dest="are_methods", type=_str_list)
            sp.add_argument("--no-closed-loop", dest="closed_loop", action="store_const",
                            const=False, help="skip full-order closed-loop eigenvalues")
        if name == "plot":
            sp.add_argument("csv", nargs="+")
        if name == "dump-matrices":
            sp.add_argument("--scenario", choices=("forward", "lqr"), default="lqr")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    np.set_printoptions(precision=6)
    try:
        return args.func(cfg, args)
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
