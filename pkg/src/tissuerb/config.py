"""Experiment configuration (JSON file + CLI overrides)."""
from dataclasses import asdict, dataclass, field, fields
import json

from .mor_forward import FORWARD_METHODS
from .mor_lqr import ARE_METHODS


@dataclass
class ExperimentConfig:
    nx: int = 10
    ny: int = 20
    lam: float = 50.0
    mu: float = 50.0
    rho: float = 1.0
    solid_mass: float = 100.0
    # Rayleigh damping (alpha, beta) per scenario; the ARE needs damped tissue modes
    forward_damping: tuple = (0.0, 0.0)
    lqr_damping: tuple = (0.0, 0.1)
    gravity: tuple = (0.0, 0.0)
    q_scale: float = 1.0
    r_scale: float = 1.0
    n_t: int = 600
    T_forward: float = 3.0
    T_lqr: float = 300.0
    target: tuple = (5.0, 5.0)
    forward_methods: list = field(default_factory=lambda: list(FORWARD_METHODS))
    are_methods: list = field(default_factory=lambda: list(ARE_METHODS))
    # explicit basis sizes for sweeps; None -> energy rule (forward) / [8] (lqr)
    sizes: list = None
    energy: float = 0.999
    timing: bool = True
    timing_repeats: int = 5
    closed_loop: bool = True
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        for name in ("forward_damping", "lqr_damping", "gravity", "target"):
            setattr(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self):
        if self.nx < 1 or self.ny < 1 or self.ny % 4:
            raise ValueError("mesh needs nx >= 1 and ny divisible by 4 (Dirichlet strip at y=1.5)")
        if min(self.lam, self.mu, self.rho, self.solid_mass) <= 0:
            raise ValueError("material parameters and hand mass must be positive")
        if self.n_t < 1 or self.T_forward <= 0 or self.T_lqr <= 0:
            raise ValueError("time grid needs n_t >= 1 and T > 0")
        if not 0 < self.energy <= 1:
            raise ValueError("energy fraction must lie in (0, 1]")
        if self.q_scale < 0 or self.r_scale <= 0:
            raise ValueError("need q_scale >= 0 and r_scale > 0")
        if self.timing_repeats < 1:
            raise ValueError("timing_repeats must be >= 1")
        for name in ("forward_damping", "lqr_damping", "gravity", "target"):
            if len(getattr(self, name)) != 2:
                raise ValueError(f"{name} needs two entries")
        bad = set(self.forward_methods) - set(FORWARD_METHODS)
        bad |= set(self.are_methods) - set(ARE_METHODS)
        if bad:
            raise ValueError(f"unknown method(s): {sorted(bad)}")
        if self.sizes is not None and any(int(n) < 1 for n in self.sizes):
            raise ValueError("basis sizes must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def updated(self, **overrides):
        d = asdict(self)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return type(self).from_dict(d)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")
