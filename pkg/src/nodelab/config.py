"""Flat key=value experiment configuration.

A config is a plain text file, one `key = value` per line, `#` comments
allowed.  Unknown keys are rejected so typos fail loudly.  The resolution
rule is enforced up front: every requested mode must be resolved by at
least `min_cells_per_wavelength` cells per 1/sqrt(lam), before any compute
starts.

Recognised keys (see README for the full story):

    name                       experiment label, used in file names
    kind                       rectangle | torus | disk | stadium
    dims                       comma-separated side lengths
    radius                     disk / stadium radius
    modes                      "2,2;3,2" explicit tuples, or "diag:2..12"
    n_cells                    fixed resolution (cells across longest side)
    cells_per_mode             resolution = cells_per_mode * max|mode|
    eps0                       wavelength-ball scale, default 1.0
    radii                      probe radii, comma floats, default 1,2,4
    radii_unit                 wavelength (r = value/sqrt(lam)) | absolute
    max_centers                scan center budget, default 512
    alpha_centers              center budget for alpha scans, default 96
    components_per_mode        3D: nodal components checked per mode
    checks                     comma subset of: asymmetry doubling posvol
                               inradius thm61
    min_cells_per_wavelength   resolution floor, default 8
    seed                       subsampling offset seed, default 0
    jobs                       worker threads for the sweep, default 1
    out                        output directory
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .domain import DomainSpec
from .errors import ConfigError

_KNOWN_CHECKS = ("inradius", "asymmetry", "doubling", "posvol", "thm61")

_DEFAULTS = {
    "name": "experiment",
    "kind": "rectangle",
    "dims": f"{math.pi},{math.pi}",
    "radius": "0",
    "modes": "diag:2..6",
    "n_cells": "0",
    "cells_per_mode": "64",
    "eps0": "1.0",
    "radii": "1,2,4",
    "radii_unit": "wavelength",
    "max_centers": "512",
    "alpha_centers": "96",
    "components_per_mode": "3",
    "checks": "",
    "min_cells_per_wavelength": "8",
    "seed": "0",
    "jobs": "1",
    "out": "out",
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    dims: tuple[float, ...]
    radius: float
    modes: tuple[tuple[int, ...], ...]
    n_cells: int
    cells_per_mode: int
    eps0: float
    radii: tuple[float, ...]
    radii_unit: str
    max_centers: int
    alpha_centers: int
    components_per_mode: int
    checks: tuple[str, ...]
    min_cells_per_wavelength: int
    seed: int
    jobs: int
    out: str
    raw: tuple[tuple[str, str], ...] = field(repr=False)

    @property
    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.raw))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def domain_spec(self) -> DomainSpec:
        if self.kind == "torus":
            return DomainSpec("torus", dims=self.dims, boundary="periodic")
        if self.kind == "rectangle":
            return DomainSpec("rectangle", dims=self.dims)
        if self.kind == "disk":
            return DomainSpec("disk", radius=self.radius)
        if self.kind == "stadium":
            return DomainSpec("stadium", dims=self.dims, radius=self.radius)
        raise ConfigError(f"unsupported kind {self.kind!r}")

    def mode_eigenvalue(self, mode: tuple[int, ...]) -> float:
        if self.kind == "rectangle":
            return sum((m * math.pi / L) ** 2 for m, L in zip(mode, self.dims))
        if self.kind == "torus":
            return sum((2 * math.pi * m / L) ** 2 for m, L in zip(mode, self.dims))
        raise ConfigError(f"sweeps need closed-form modes; kind={self.kind!r}")

    def resolution_for(self, mode: tuple[int, ...]) -> int:
        if self.cells_per_mode > 0:
            return self.cells_per_mode * max(abs(m) for m in mode)
        return self.n_cells

    def scan_radii(self, lam: float) -> tuple[float, ...]:
        if self.radii_unit == "wavelength":
            return tuple(r / math.sqrt(lam) for r in self.radii)
        return self.radii


def _parse_modes(text: str, n_axes: int) -> tuple[tuple[int, ...], ...]:
    text = text.strip()
    if text.startswith("diag:"):
        lo_hi = text[5:].split("..")
        if len(lo_hi) != 2:
            raise ConfigError(f"bad diagonal mode range {text!r}")
        lo, hi = int(lo_hi[0]), int(lo_hi[1])
        if lo > hi:
            raise ConfigError(f"empty mode range {text!r}")
        return tuple((m,) * n_axes for m in range(lo, hi + 1))
    modes = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        tup = tuple(int(t) for t in part.split(","))
        if len(tup) != n_axes:
            raise ConfigError(
                f"mode {part!r} has {len(tup)} indices for {n_axes} axes"
            )
        modes.append(tup)
    if not modes:
        raise ConfigError("no modes requested")
    return tuple(modes)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse config text; overrides (e.g. from CLI flags) replace file values."""
    seen: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = val
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown override {key!r}")
            seen[key] = str(val)

    merged = dict(_DEFAULTS)
    merged.update(seen)

    try:
        dims = tuple(float(t) for t in merged["dims"].split(",") if t.strip())
        kind = merged["kind"]
        n_axes = 2 if kind in ("disk", "stadium") else len(dims)
        modes = _parse_modes(merged["modes"], n_axes)
        radii = tuple(float(t) for t in merged["radii"].split(",") if t.strip())
        cfg = ExperimentConfig(
            name=merged["name"],
            kind=kind,
            dims=dims,
            radius=float(merged["radius"]),
            modes=modes,
            n_cells=int(merged["n_cells"]),
            cells_per_mode=int(merged["cells_per_mode"]),
            eps0=float(merged["eps0"]),
            radii=radii,
            radii_unit=merged["radii_unit"],
            max_centers=int(merged["max_centers"]),
            alpha_centers=int(merged["alpha_centers"]),
            components_per_mode=int(merged["components_per_mode"]),
            checks=tuple(
                t.strip() for t in merged["checks"].split(",") if t.strip()
            ),
            min_cells_per_wavelength=int(merged["min_cells_per_wavelength"]),
            seed=int(merged["seed"]),
            jobs=int(merged["jobs"]),
            out=merged["out"],
            raw=tuple(sorted(merged.items())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc

    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.radii_unit not in ("wavelength", "absolute"):
        raise ConfigError(f"radii_unit must be wavelength|absolute, got {cfg.radii_unit!r}")
    for c in cfg.checks:
        if c not in _KNOWN_CHECKS:
            raise ConfigError(f"unknown check {c!r}; known: {_KNOWN_CHECKS}")
    if cfg.eps0 <= 0:
        raise ConfigError("eps0 must be positive")
    if cfg.max_centers < 1 or cfg.alpha_centers < 1:
        raise ConfigError("center budgets must be positive")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.n_cells <= 0 and cfg.cells_per_mode <= 0:
        raise ConfigError("set n_cells or cells_per_mode")
    if cfg.kind in ("rectangle", "torus"):
        if not cfg.dims:
            raise ConfigError(f"{cfg.kind} needs dims")
        for mode in cfg.modes:
            lam = cfg.mode_eigenvalue(mode)
            if lam <= 0:
                continue
            n = cfg.resolution_for(mode)
            h = max(cfg.dims) / n
            cells_per_wavelength = (1.0 / math.sqrt(lam)) / h
            if cells_per_wavelength < cfg.min_cells_per_wavelength:
                raise ConfigError(
                    f"mode {mode} at {n} cells resolves 1/sqrt(lam) by "
                    f"{cells_per_wavelength:.2f} cells, need "
                    f">= {cfg.min_cells_per_wavelength}"
                )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
