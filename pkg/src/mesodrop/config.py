"""Run configuration: strict JSON parsing, validation, canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .units import Constants

VALID_FORMATS = ("csv", "json", "png")


class ConfigError(ValueError):
    """Invalid or unknown configuration content (CLI exit code 2)."""


@dataclass(frozen=True)
class PotentialConfig:
    """Pair-potential parameter overrides (HFDHE2 helium-4 defaults)."""

    eps_over_kB: float = 10.8
    r_m: float = 2.9673
    A: float = 0.5448504e6
    alpha: float = 13.353384
    C6: float = 1.3732412
    C8: float = 0.4253785
    C10: float = 0.178100
    D: float = 1.241314


@dataclass(frozen=True)
class DropletConfig:
    N: int = 1000
    l_angstrom: float = 3.6


@dataclass(frozen=True)
class KernelConfig:
    xi: float = 0.35
    kappa: float | str = "calibrate"


@dataclass(frozen=True)
class GridConfig:
    r_max_factor: float = 3.0
    n_points: int = 400


@dataclass(frozen=True)
class ScfConfig:
    mixing: float = 0.3
    tol: float = 1e-10
    max_iter: int = 500


@dataclass(frozen=True)
class SeedsConfig:
    mc_seed: int = 20080818


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "png")


@dataclass(frozen=True)
class RunConfig:
    constants: Constants = field(default_factory=Constants)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    droplet: DropletConfig = field(default_factory=DropletConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    scf: ScfConfig = field(default_factory=ScfConfig)
    seeds: SeedsConfig = field(default_factory=SeedsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["output"]["formats"] = list(self.output.formats)
        return d

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _require_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(unknown)}")


def _number(section: str, key: str, value, lo=None, hi=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{section}.{key} must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{section}.{key} must be <= {hi}, got {value}")
    return int(value) if integer else float(value)


def config_from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig; unknown keys are rejected at every level."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    _require_keys("<root>", data, {"constants", "potential", "droplet", "kernel",
                                   "grid", "scf", "seeds", "output"})

    c = data.get("constants", {})
    _require_keys("constants", c, {"hbar", "k_B", "m"})
    constants = Constants(
        hbar=_number("constants", "hbar", c.get("hbar", Constants.hbar), lo=0.0),
        k_B=_number("constants", "k_B", c.get("k_B", Constants.k_B), lo=0.0),
        m=_number("constants", "m", c.get("m", Constants.m), lo=0.0),
    )

    p = data.get("potential", {})
    pot_fields = {"eps_over_kB", "r_m", "A", "alpha", "C6", "C8", "C10", "D"}
    _require_keys("potential", p, pot_fields)
    pot_kwargs = {}
    for key in pot_fields:
        default = getattr(PotentialConfig, key)
        lo = 0.0 if key in ("eps_over_kB", "A", "C6", "C8", "C10") else 1e-12
        pot_kwargs[key] = _number("potential", key, p.get(key, default), lo=lo)
    potential = PotentialConfig(**pot_kwargs)

    d = data.get("droplet", {})
    _require_keys("droplet", d, {"N", "l_angstrom"})
    droplet = DropletConfig(
        N=_number("droplet", "N", d.get("N", DropletConfig.N), lo=2, integer=True),
        l_angstrom=_number("droplet", "l_angstrom",
                           d.get("l_angstrom", DropletConfig.l_angstrom), lo=1e-3),
    )

    k = data.get("kernel", {})
    _require_keys("kernel", k, {"xi", "kappa"})
    kappa = k.get("kappa", KernelConfig.kappa)
    if kappa != "calibrate":
        kappa = _number("kernel", "kappa", kappa, lo=1e-6)
    kernel = KernelConfig(
        xi=_number("kernel", "xi", k.get("xi", KernelConfig.xi), lo=0.0),
        kappa=kappa,
    )

    g = data.get("grid", {})
    _require_keys("grid", g, {"r_max_factor", "n_points"})
    grid = GridConfig(
        r_max_factor=_number("grid", "r_max_factor",
                             g.get("r_max_factor", GridConfig.r_max_factor), lo=0.5),
        n_points=_number("grid", "n_points",
                         g.get("n_points", GridConfig.n_points), lo=200, integer=True),
    )

    s = data.get("scf", {})
    _require_keys("scf", s, {"mixing", "tol", "max_iter"})
    mixing = _number("scf", "mixing", s.get("mixing", ScfConfig.mixing))
    if not 0.0 < mixing <= 1.0:
        raise ConfigError(f"scf.mixing must lie in (0, 1], got {mixing}")
    scf = ScfConfig(
        mixing=mixing,
        tol=_number("scf", "tol", s.get("tol", ScfConfig.tol), lo=1e-15),
        max_iter=_number("scf", "max_iter", s.get("max_iter", ScfConfig.max_iter),
                         lo=1, integer=True),
    )

    sd = data.get("seeds", {})
    _require_keys("seeds", sd, {"mc_seed"})
    seeds = SeedsConfig(
        mc_seed=_number("seeds", "mc_seed", sd.get("mc_seed", SeedsConfig.mc_seed),
                        lo=0, integer=True),
    )

    o = data.get("output", {})
    _require_keys("output", o, {"directory", "formats"})
    directory = o.get("directory", OutputConfig.directory)
    if not isinstance(directory, str) or not directory:
        raise ConfigError(f"output.directory must be a non-empty string, got {directory!r}")
    formats = o.get("formats", list(OutputConfig.formats))
    if (not isinstance(formats, list) or not formats
            or any(f not in VALID_FORMATS for f in formats)):
        raise ConfigError(
            f"output.formats must be a non-empty subset of {list(VALID_FORMATS)}, got {formats!r}"
        )
    output = OutputConfig(directory=directory, formats=tuple(dict.fromkeys(formats)))

    return RunConfig(constants=constants, potential=potential, droplet=droplet,
                     kernel=kernel, grid=grid, scf=scf, seeds=seeds, output=output)


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def parse_xi_list(text: str) -> list[float]:
    """Parse '0.2:1.0:0.05' ranges or '0.35,0.6,0.9' comma lists."""
    text = text.strip()
    try:
        if ":" in text:
            start_s, stop_s, step_s = text.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0.0 or stop < start:
                raise ValueError
            values = []
            k = 0
            while True:
                x = start + k * step
                if x > stop + 1e-12:
                    break
                values.append(round(x, 12))
                k += 1
            return values
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse xi list {text!r}") from exc
