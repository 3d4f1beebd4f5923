"""Catalog entries and run configuration."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, replace
from importlib import resources

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .solver import Scenario, boundary_mean_curvature

AMBIENTS = ("hyperbolic_ball_5d", "hyperbolic_normal_form_5d", "hyperbolic_3d", "hyperbolic_4d")
BOUNDARIES = ("equatorial_sphere", "spherical_cap", "clifford_type", "geodesic_circle",
              "custom_rotational", "none")
ETA_TOL = 1e-8


class ConfigError(ValueError):
    pass


@dataclass
class CatalogEntry:
    id: str
    ambient: str
    boundary: str
    p1: int = 0
    p2: int = 0
    psi0: float = 0.0
    starts: tuple = ("axis2",)
    multiplicity: int = 1
    chi_hint: int | None = None
    minimal_in_representative: bool = True
    verifications: tuple = ()

    @property
    def eta(self):
        if self.boundary == "none":
            return 0.0
        return boundary_mean_curvature(self.p1, self.p2, self.psi0)

    @property
    def dimension(self):
        return {"hyperbolic_3d": 2, "hyperbolic_4d": 0}.get(self.ambient, 4)

    def validation(self):
        """``(ok, message)`` for the boundary minimality invariant."""
        eta = self.eta
        if abs(eta) <= ETA_TOL:
            return True, f"minimal (|eta| = {abs(eta):.1e})"
        if not self.minimal_in_representative:
            return True, f"declared non-minimal in the round representative (eta = {eta:.4f})"
        return False, f"boundary not minimal: eta = {eta:.3e}"

    def scenario(self, **overrides) -> Scenario:
        if self.boundary == "none":
            raise ConfigError(f"catalog entry {self.id!r} has no hypersurface")
        scn = Scenario(name=self.id, p1=self.p1, p2=self.p2, psi0=self.psi0, starts=tuple(self.starts),
                       chi_hint=self.chi_hint, multiplicity=self.multiplicity,
                       require_minimal_boundary=self.minimal_in_representative)
        return replace(scn, **overrides)


def default_catalog_path():
    return str(resources.files("renarea") / "data" / "catalog.toml")


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: file not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc


_ENTRY_KEYS = {f for f in CatalogEntry.__dataclass_fields__} - {"id"}


def load_catalog(path=None):
    path = path or os.environ.get("RENAREA_CATALOG") or default_catalog_path()
    raw = _load_toml(path)
    out = {}
    for key, body in raw.items():
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: entry {key!r} must be a table")
        unknown = set(body) - _ENTRY_KEYS
        if unknown:
            raise ConfigError(f"{path}: entry {key!r} has unknown keys {sorted(unknown)}")
        try:
            e = CatalogEntry(id=key, **body)
        except TypeError as exc:
            raise ConfigError(f"{path}: entry {key!r}: {exc}") from exc
        if e.ambient not in AMBIENTS:
            raise ConfigError(f"{path}: entry {key!r}: unknown ambient {e.ambient!r}")
        if e.boundary not in BOUNDARIES:
            raise ConfigError(f"{path}: entry {key!r}: unknown boundary {e.boundary!r}")
        e.starts = tuple(e.starts)
        e.verifications = tuple(e.verifications)
        ok, msg = e.validation()
        if not ok:
            raise ConfigError(f"{path}: entry {key!r}: {msg}")
        out[key] = e
    return out


def list_catalog(path=None):
    rows = []
    for e in load_catalog(path).values():
        ok, msg = e.validation()
        rows.append(dict(id=e.id, ambient=e.ambient, boundary=e.boundary, eta=e.eta,
                         valid=ok, eta_check=msg))
    return rows


@dataclass
class RunConfig:
    scenario: str
    overrides: dict = field(default_factory=dict)
    r_min: float = 1e-5
    r_0: float = 0.5
    n_r: int = 400
    eps_max: float | None = None
    count: int = 10
    ratio: float = 2.0
    directory: str = "renarea-out"
    formats: tuple = ("json", "csv")
    verifications: tuple | None = None
    seed: int = 0

    def validate(self, catalog=None):
        catalog = load_catalog() if catalog is None else catalog
        if self.scenario not in catalog:
            raise ConfigError(f"unknown scenario {self.scenario!r}; known: {sorted(catalog)}")
        if not (self.r_min > 0):
            raise ConfigError("grid.r_min must be positive")
        if not (self.r_min < self.r_0):
            raise ConfigError(f"grid.r_min = {self.r_min} must be below grid.r_0 = {self.r_0}")
        if not (0 < self.r_0 < 2.0):
            raise ConfigError("grid.r_0 must lie in (0, 2)")
        if self.n_r < 16:
            raise ConfigError("grid.n_r must be at least 16")
        if self.count < 8:
            raise ConfigError("ladder.count must be at least 8")
        if not (self.ratio > 1):
            raise ConfigError("ladder.ratio must exceed 1")
        eps_max = self.ladder_max
        eps_min = eps_max / self.ratio ** (self.count - 1)
        if not (eps_max < self.r_0):
            raise ConfigError("ladder.eps_max must be below grid.r_0")
        if not (eps_min >= 2 * self.r_min):
            raise ConfigError(f"smallest ladder value {eps_min:.3e} is below 2 r_min")
        from .verify import IDENTITIES
        unknown = set(self.verifications or ()) - set(IDENTITIES)
        if unknown:
            raise ConfigError(f"unknown verifications {sorted(unknown)}")
        fields = set(Scenario.__dataclass_fields__) - {"name", "p1", "p2", "psi0"}
        extra = set(self.overrides) - fields
        if extra:
            raise ConfigError(f"scenario overrides {sorted(extra)} are not scenario fields")
        return self

    @property
    def ladder_max(self):
        return self.r_0 / 4.0 if self.eps_max is None else self.eps_max

    def ladder(self):
        from .renormalization import ladder
        return ladder(self.ladder_max, self.count, self.ratio)

    def entry(self, catalog=None):
        catalog = load_catalog() if catalog is None else catalog
        return catalog[self.scenario]

    def scenario_obj(self, catalog=None):
        ov = {k: tuple(v) if isinstance(v, list) else v for k, v in self.overrides.items()}
        return self.entry(catalog).scenario(r_min=self.r_min, r_0=self.r_0, n_r=self.n_r, **ov)

    def requested(self, catalog=None):
        if self.verifications is not None:
            return tuple(self.verifications)
        return self.entry(catalog).verifications


_SECTIONS = {
    "scenario": {"id": "scenario", "overrides": "overrides"},
    "grid": {"r_min": "r_min", "r_0": "r_0", "n_r": "n_r"},
    "ladder": {"eps_max": "eps_max", "count": "count", "ratio": "ratio"},
    "outputs": {"directory": "directory", "formats": "formats"},
    "run": {"verifications": "verifications", "seed": "seed"},
}


def load_config(path) -> RunConfig:
    raw = _load_toml(path)
    kw = {}
    for sec, body in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        for k, v in body.items():
            if k not in _SECTIONS[sec]:
                raise ConfigError(f"{path}: unknown key {sec}.{k}")
            kw[_SECTIONS[sec][k]] = v
    if "scenario" not in kw:
        raise ConfigError(f"{path}: missing scenario.id")
    for k in ("formats", "verifications"):
        if kw.get(k) is not None:
            kw[k] = tuple(kw[k])
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
