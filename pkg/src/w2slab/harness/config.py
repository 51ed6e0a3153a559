"""Sweep configuration: dataclass, INI loader and the desk-scale preset.

Config files are line-oriented ``key = value`` with section headers::

    [synthetic]
    d = 20000
    d_star = 60
    d_s = 20
    d_w = 40

    [sweep]
    n_grid = 46, 60, 100
    N_grid = 400
    sigma2_grid = 0.01
    overlap_grid = 2, 10, 18
    trials = 40
    seed = 0

    [solver]
    ridge_alpha = 0

    [theory]
    c = 1

    [output]
    out = runs/desk
    svg = false
    tolerance = 0.1
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Tuple

from ..features import SyntheticConfig
from ..linalg import SolverConfig

__all__ = ["ConfigError", "SweepConfig", "desk_preset", "load_config", "apply_overrides"]


class ConfigError(ValueError):
    """Invalid or inconsistent sweep configuration."""


@dataclass(frozen=True)
class SweepConfig:
    base: SyntheticConfig = SyntheticConfig()
    n_grid: Tuple[int, ...] = (46,)
    N_grid: Tuple[int, ...] = (400,)
    sigma2_grid: Tuple[float, ...] = (0.01,)
    overlap_grid: Tuple[int, ...] = (2,)
    trials: int = 40
    seed: int = 0
    out_dir: str = "runs"
    emit_svg: bool = False
    solver: SolverConfig = SolverConfig()
    theory_constant_c: float = 1.0
    workers: int = 1
    tolerance: float = 0.1
    latent: str = "gaussian"

    def __post_init__(self):
        for name in ("n_grid", "N_grid", "sigma2_grid", "overlap_grid"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ConfigError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        if self.trials < 2:
            raise ConfigError("trials must be at least 2")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if any(n < 1 for n in self.n_grid) or any(N < 1 for N in self.N_grid):
            raise ConfigError("sample sizes must be positive")
        if any(s < 0 for s in self.sigma2_grid):
            raise ConfigError("noise variances must be nonnegative")
        if self.theory_constant_c < 0:
            raise ConfigError("the theory constant c must be nonnegative")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.latent not in ("gaussian", "rademacher"):
            raise ConfigError(f"unknown latent {self.latent!r}")
        for ov in self.overlap_grid:
            try:
                replace(self.base, d_overlap=ov)
            except ValueError as exc:
                raise ConfigError(f"overlap {ov}: {exc}") from exc

    def grid(self):
        """Grid points ``(overlap, sigma2, n, N)`` in the fixed sweep order."""
        return [(ov, s2, n, N) for ov in self.overlap_grid for s2 in self.sigma2_grid
                for n in self.n_grid for N in self.N_grid]

    @property
    def csv_path(self) -> str:
        return os.path.join(self.out_dir, "sweep.csv")


def desk_preset(**overrides) -> SweepConfig:
    """Desk-scale version of the synthetic experiments.

    The dimensions are shrunk fivefold (``d_* = 60, d_s = 20, d_w = 40``) but
    the ambient dimension stays at ``d = 20000``: the ridgeless fits only see
    the joint support, so the large ``d`` costs nothing and keeps ``rho_s,
    rho_w`` far below ``sigma^2 = 0.01`` as in the full-size setting.
    """
    base = SyntheticConfig(d=20000, d_star=60, d_s=20, d_w=40, d_overlap=2, sigma2=0.01)
    cfg = dict(base=base, n_grid=(46, 60, 100, 200), N_grid=(100, 400, 1000), sigma2_grid=(0.01,),
               overlap_grid=(2, 10, 18), trials=40, seed=0, out_dir="runs/desk")
    cfg.update(overrides)
    return SweepConfig(**cfg)


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_SYNTH_KEYS = {"d": int, "d_star": int, "d_s": int, "d_w": int, "d_overlap": int, "sigma2": float}
_KNOWN = {
    "synthetic": set(_SYNTH_KEYS) | {"eigenvalues", "latent"},
    "sweep": {"n_grid", "N_grid", "sigma2_grid", "overlap_grid", "trials", "seed", "workers"},
    "solver": {"ridge_alpha", "rcond"},
    "theory": {"c"},
    "output": {"out", "svg", "tolerance"},
}


def load_config(path: Optional[str] = None, preset: Optional[SweepConfig] = None) -> SweepConfig:
    """Read an INI file on top of ``preset`` (the desk preset by default)."""
    cfg = preset if preset is not None else desk_preset()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - _KNOWN[section]
        if unknown:
            raise ConfigError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return _from_sections(cfg, {s: dict(parser[s]) for s in parser.sections()})
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def _from_sections(cfg: SweepConfig, sec: Mapping[str, Mapping[str, str]]) -> SweepConfig:
    synth = sec.get("synthetic", {})
    base_kw = {k: conv(synth[k]) for k, conv in _SYNTH_KEYS.items() if k in synth}
    if "eigenvalues" in synth:
        base_kw["eigenvalue_profile"] = (synth["eigenvalues"].strip() if synth["eigenvalues"].strip() == "inverse_index"
                                         else _floats(synth["eigenvalues"]))
    kw = {}
    if base_kw:
        kw["base"] = replace(cfg.base, **base_kw)
    if "latent" in synth:
        kw["latent"] = synth["latent"].strip()
    sweep = sec.get("sweep", {})
    for key, conv in (("n_grid", _ints), ("N_grid", _ints), ("sigma2_grid", _floats), ("overlap_grid", _ints)):
        if key in sweep:
            kw[key] = conv(sweep[key])
    for key in ("trials", "seed", "workers"):
        if key in sweep:
            kw[key] = int(sweep[key])
    solver = sec.get("solver", {})
    if solver:
        alpha = float(solver.get("ridge_alpha", cfg.solver.ridge_alpha))
        rcond = solver.get("rcond")
        kw["solver"] = SolverConfig(alpha, float(rcond) if rcond not in (None, "", "none") else cfg.solver.rcond)
    if "c" in sec.get("theory", {}):
        kw["theory_constant_c"] = float(sec["theory"]["c"])
    out = sec.get("output", {})
    if "out" in out:
        kw["out_dir"] = out["out"]
    if "svg" in out:
        kw["emit_svg"] = _bool(out["svg"])
    if "tolerance" in out:
        kw["tolerance"] = float(out["tolerance"])
    if "sigma2" in base_kw and "sigma2_grid" not in kw:
        kw["sigma2_grid"] = (base_kw["sigma2"],)
    return _rebuild(cfg, kw)


def _rebuild(cfg: SweepConfig, kw) -> SweepConfig:
    try:
        return replace(cfg, **kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def apply_overrides(cfg: SweepConfig, *, out: Optional[str] = None, trials: Optional[int] = None,
                    workers: Optional[int] = None, seed: Optional[int] = None, svg: Optional[bool] = None,
                    tolerance: Optional[float] = None) -> SweepConfig:
    """CLI flags take precedence over the file."""
    kw = {}
    if out is not None:
        kw["out_dir"] = out
    if trials is not None:
        kw["trials"] = trials
    if workers is not None:
        kw["workers"] = workers
    if seed is not None:
        kw["seed"] = seed
    if svg:
        kw["emit_svg"] = True
    if tolerance is not None:
        kw["tolerance"] = tolerance
    return _rebuild(cfg, kw)
