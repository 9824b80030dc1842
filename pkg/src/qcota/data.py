"""Datasets: CSV ingestion, synthetic field generation, run configuration.

File formats
------------
measurements CSV: header ``cycle,cell_id,attribute,value``; one row per
observed value, 0-based integer cycles.  Missing (cycle, cell, attribute)
entries are filled by linear interpolation *in time only* (never in space:
spatial inference is the system under test), and an attribute missing more
than 20% of its entries is rejected.

stations CSV: header ``cell_id,x_km,y_km`` or ``cell_id,lat,lon``
(auto-detected).  Latitude/longitude are projected to kilometres with an
equirectangular projection about the station centroid, which is accurate
to well under a percent at the regional scales this targets.

run config JSON: keys match the RunConfig fields verbatim; unknown keys
are rejected so typos fail loudly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import GridGeometry
from .errors import ConfigError, DataError
from .seeding import MASK64

EARTH_RADIUS_KM = 6371.0

# Synthetic-field design constants (regional scale, heterogeneous dynamics):
# cells live in a square of this side, and a few well-separated "hotspot"
# cells carry most of the field's variability against a quiet background,
# the way a small set of urban sites dominates a regional sensing network.
SYNTHETIC_EXTENT_KM = 250.0
HOTSPOT_BASE = 0.05          # background volatility relative to a hotspot
HOTSPOT_RADIUS_FRAC = 0.06   # bump radius as a fraction of the extent
HOTSPOT_MIN_SEP_FRAC = 0.25  # minimum hotspot separation, fraction of extent

SCHEMES = ("QCO-TA", "OO-MTA", "GPS-TA", "EWA-TA", "UNS-TA")
INFERENCES = ("KNN", "IDW", "SVR")


@dataclass(frozen=True)
class IngestStats:
    duplicates: int = 0
    filled: int = 0


@dataclass(frozen=True)
class Dataset:
    """Grid geometry plus the dense ground-truth matrix (A, X, Y)."""

    geometry: GridGeometry
    attribute_names: tuple[str, ...]
    truth: np.ndarray
    stats: IngestStats | None = None

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=float)
        a, x, y = truth.shape
        if len(self.attribute_names) != a:
            raise DataError("attribute_names must match the truth matrix")
        if x != self.geometry.n_cells:
            raise DataError("truth matrix does not match the geometry")
        if a < 1 or x < 2 or y < 2:
            raise DataError(f"dataset too small: A={a}, X={x}, Y={y}")
        if not np.all(np.isfinite(truth)):
            raise DataError("ground truth contains non-finite values")
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    @property
    def n_attributes(self) -> int:
        return self.truth.shape[0]

    @property
    def n_cells(self) -> int:
        return self.truth.shape[1]

    @property
    def n_cycles(self) -> int:
        return self.truth.shape[2]


# ---------------------------------------------------------------------------
# synthetic generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    X: int = 24
    Y: int = 100
    A: int = 2
    spatial_length_scale_km: float = 12.5
    temporal_correlation: float = 0.6
    cross_attribute_correlation: float = 0.6
    noise_sd: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.X < 2:
            raise ConfigError("X must be >= 2")
        if self.Y < 2:
            raise ConfigError("Y must be >= 2")
        if self.A < 1:
            raise ConfigError("A must be >= 1")
        if not (self.spatial_length_scale_km > 0):
            raise ConfigError("spatial_length_scale_km must be > 0")
        if not (0.0 <= self.temporal_correlation < 1.0):
            raise ConfigError("temporal_correlation must lie in [0, 1)")
        if not (-1.0 <= self.cross_attribute_correlation <= 1.0):
            raise ConfigError("cross_attribute_correlation must lie in [-1, 1]")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")


def _ar1(rng: np.random.Generator, n_cells: int, n_cycles: int, phi: float) -> np.ndarray:
    """Stationary unit-variance AR(1) rows: z_t = phi z_{t-1} + sqrt(1-phi^2) e_t."""
    out = np.empty((n_cells, n_cycles))
    out[:, 0] = rng.standard_normal(n_cells)
    innov_sd = math.sqrt(1.0 - phi * phi)
    for t in range(1, n_cycles):
        out[:, t] = phi * out[:, t - 1] + innov_sd * rng.standard_normal(n_cells)
    return out


def _hotspot_profile(rng: np.random.Generator, geometry: GridGeometry) -> np.ndarray:
    """Per-cell volatility multipliers: quiet background plus a few bumps.

    Hotspot cells are drawn in seeded random order under a minimum
    separation constraint, so they spread across the region like the urban
    sites of a real network.
    """
    n_cells = geometry.n_cells
    n_hot = max(1, n_cells // 6)
    min_sep = HOTSPOT_MIN_SEP_FRAC * SYNTHETIC_EXTENT_KM
    order = rng.permutation(n_cells)
    hot: list[int] = []
    for cell in order:
        if all(geometry.distances[cell, h] >= min_sep for h in hot):
            hot.append(int(cell))
        if len(hot) == n_hot:
            break
    for cell in order:  # relax the separation rule if the draw was unlucky
        if len(hot) == n_hot:
            break
        if int(cell) not in hot:
            hot.append(int(cell))
    d_hot = geometry.distances[:, hot].min(axis=1)
    radius = HOTSPOT_RADIUS_FRAC * SYNTHETIC_EXTENT_KM
    return HOTSPOT_BASE + np.exp(-(d_hot**2) / (2.0 * radius**2))


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Deterministic synthetic multi-attribute spatio-temporal field.

    Per attribute, each cell carries a latent AR(1) series; a shared latent
    factor with loading ``cross_attribute_correlation`` couples attributes
    (with a negative loading, attribute 0 anti-correlates with the rest);
    a row-normalized Gaussian kernel over cell coordinates smooths each
    cycle spatially so autocorrelation decays with the length scale; and a
    seeded hotspot volatility profile scales the result per cell, giving
    the field the strongly heterogeneous dynamics of real sensing data.
    Attributes get distinct offsets/scales so their units differ like real
    sensing attributes do.
    """
    rng = np.random.default_rng(cfg.seed & MASK64)
    coords = rng.uniform(0.0, SYNTHETIC_EXTENT_KM, size=(cfg.X, 2))
    geometry = GridGeometry(coords)
    volatility = _hotspot_profile(rng, geometry)

    rho = cfg.cross_attribute_correlation
    load = math.sqrt(abs(rho))
    resid = math.sqrt(1.0 - abs(rho))
    shared = _ar1(rng, cfg.X, cfg.Y, cfg.temporal_correlation)
    latents = [
        load * (1.0 if a == 0 else math.copysign(1.0, rho) if rho != 0 else 1.0) * shared
        + resid * _ar1(rng, cfg.X, cfg.Y, cfg.temporal_correlation)
        for a in range(cfg.A)
    ]

    d2 = geometry.distances**2
    kernel = np.exp(-d2 / (2.0 * cfg.spatial_length_scale_km**2))
    mix = kernel / kernel.sum(axis=1, keepdims=True)

    truth = np.empty((cfg.A, cfg.X, cfg.Y))
    for a, latent in enumerate(latents):
        fld = volatility[:, None] * (mix @ latent)
        if cfg.noise_sd > 0:
            fld = fld + cfg.noise_sd * rng.standard_normal((cfg.X, cfg.Y))
        truth[a] = 10.0 * (a + 1) + (1.0 + 0.5 * a) * fld
    names = tuple(f"attr{a}" for a in range(cfg.A))
    return Dataset(geometry=geometry, attribute_names=names, truth=truth)


# ---------------------------------------------------------------------------
# CSV ingestion / serialization
# ---------------------------------------------------------------------------


def _project_equirectangular(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    lat0, lon0 = lat.mean(), lon.mean()
    x = EARTH_RADIUS_KM * np.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_KM * np.radians(lat - lat0)
    return np.column_stack([x, y])


def load_stations(path: str | Path) -> GridGeometry:
    """Read the stations CSV; planar km or lat/lon headers are accepted."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty stations file") from None
        rows = [row for row in reader if row]
    if header == ["cell_id", "x_km", "y_km"]:
        planar = True
    elif header == ["cell_id", "lat", "lon"]:
        planar = False
    else:
        raise DataError(f"{path}: unrecognized stations header {header}")
    try:
        ids = np.array([int(r[0]) for r in rows])
        c1 = np.array([float(r[1]) for r in rows])
        c2 = np.array([float(r[2]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed station row ({exc})") from None
    if sorted(ids.tolist()) != list(range(len(ids))):
        raise DataError(f"{path}: cell ids must be exactly 0..X-1")
    order = np.argsort(ids)
    c1, c2 = c1[order], c2[order]
    coords = np.column_stack([c1, c2]) if planar else _project_equirectangular(c1, c2)
    return GridGeometry(coords)


def load_dataset(measurements_path: str | Path, stations_path: str | Path) -> Dataset:
    """Assemble a dense Dataset from the measurements and stations CSVs.

    Attributes are ordered by sorted name.  Duplicate rows resolve
    last-wins (counted in ``stats``); interior gaps are linearly
    interpolated over cycles and boundary gaps take the nearest value.
    """
    geometry = load_stations(stations_path)
    n_cells = geometry.n_cells

    raw: dict[str, dict[tuple[int, int], float]] = {}
    duplicates = 0
    with open(measurements_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{measurements_path}: empty measurements file") from None
        if header != ["cycle", "cell_id", "attribute", "value"]:
            raise DataError(f"{measurements_path}: unrecognized header {header}")
        max_cycle = -1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                cycle = int(row[0])
                cell = int(row[1])
                name = row[2].strip()
                value = float(row[3])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{measurements_path}:{lineno}: bad row ({exc})") from None
            if cycle < 0:
                raise DataError(f"{measurements_path}:{lineno}: negative cycle {cycle}")
            if not (0 <= cell < n_cells):
                raise DataError(f"{measurements_path}:{lineno}: unknown cell_id {cell}")
            if not math.isfinite(value):
                raise DataError(f"{measurements_path}:{lineno}: non-finite value")
            bucket = raw.setdefault(name, {})
            if (cycle, cell) in bucket:
                duplicates += 1
            bucket[(cycle, cell)] = value
            max_cycle = max(max_cycle, cycle)
    if not raw:
        raise DataError(f"{measurements_path}: no measurement rows")
    n_cycles = max_cycle + 1

    names = tuple(sorted(raw))
    truth = np.full((len(names), n_cells, n_cycles), np.nan)
    for a, name in enumerate(names):
        for (cycle, cell), value in raw[name].items():
            truth[a, cell, cycle] = value

    filled = 0
    for a, name in enumerate(names):
        missing = int(np.isnan(truth[a]).sum())
        if missing > 0.2 * n_cells * n_cycles:
            raise DataError(
                f"attribute {name!r} is missing {missing} of {n_cells * n_cycles} entries (>20%)"
            )
        for x in range(n_cells):
            series = truth[a, x]
            known = np.flatnonzero(~np.isnan(series))
            if known.size == 0:
                raise DataError(f"attribute {name!r} has no values at cell {x}")
            gaps = np.flatnonzero(np.isnan(series))
            if gaps.size:
                series[gaps] = np.interp(gaps, known, series[known])
                filled += int(gaps.size)
    return Dataset(
        geometry=geometry,
        attribute_names=names,
        truth=truth,
        stats=IngestStats(duplicates=duplicates, filled=filled),
    )


def write_dataset(
    dataset: Dataset, measurements_path: str | Path, stations_path: str | Path
) -> None:
    """Write a Dataset back out; floats use repr so reloads are exact."""
    with open(stations_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("cell_id", "x_km", "y_km"))
        for cid, (x, y) in enumerate(dataset.geometry.coords):
            writer.writerow((cid, repr(float(x)), repr(float(y))))
    with open(measurements_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("cycle", "cell_id", "attribute", "value"))
        for cycle in range(dataset.n_cycles):
            for cell in range(dataset.n_cells):
                for a, name in enumerate(dataset.attribute_names):
                    writer.writerow((cycle, cell, name, repr(float(dataset.truth[a, cell, cycle]))))


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperparameters:
    alpha_te: float = 0.5
    alpha_smi: float = 0.5
    eta: float = 0.5
    delta: float = 0.95
    gamma: float = 1.0
    beta: float = 0.5
    theta_conv: float = 1e-4
    k_knn: int = 3
    n_idw: int = 3
    d_floor_km: float | None = None  # None: half the minimum nonzero pairwise distance
    cost_per_km: float = 1.0
    entropy_window: int | None = None  # None: full history

    def __post_init__(self):
        if not (0.5 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0.5, 1)")
        if not (0.0 < self.beta < 1.0):
            raise ConfigError("beta must lie in (0, 1)")
        if not (self.theta_conv > 0):
            raise ConfigError("theta_conv must be > 0")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.alpha_te < 0 or self.alpha_smi < 0:
            raise ConfigError("alpha_te and alpha_smi must be >= 0")
        if self.eta < 0:
            raise ConfigError("eta must be >= 0")
        if self.k_knn < 1 or self.n_idw < 1:
            raise ConfigError("k_knn and n_idw must be >= 1")
        if self.d_floor_km is not None and not (self.d_floor_km > 0):
            raise ConfigError("d_floor_km must be > 0")
        if not (self.cost_per_km > 0):
            raise ConfigError("cost_per_km must be > 0")
        if self.entropy_window is not None and self.entropy_window < 1:
            raise ConfigError("entropy_window must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    scheme: str = "QCO-TA"
    inference: str = "KNN"
    P: int = 8
    A_used: int = 2
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.inference not in INFERENCES:
            raise ConfigError(f"unknown inference {self.inference!r}; choose from {INFERENCES}")
        if self.P < 1:
            raise ConfigError("P must be >= 1")
        if self.A_used < 1:
            raise ConfigError("A_used must be >= 1")

    def validate_for(self, dataset: Dataset) -> None:
        """Shape checks that need the dataset; raises ConfigError on mismatch."""
        if self.P >= dataset.n_cells:
            raise ConfigError(f"P={self.P} must be smaller than the cell count X={dataset.n_cells}")
        if self.A_used > dataset.n_attributes:
            raise ConfigError(
                f"A_used={self.A_used} exceeds the dataset's {dataset.n_attributes} attributes"
            )
        if self.scheme == "GPS-TA" and self.P < self.A_used:
            raise ConfigError("GPS-TA requires P >= A_used")


def _from_mapping(cls, payload: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**payload)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def run_config_from_dict(payload: dict, where: str = "run config") -> RunConfig:
    payload = dict(payload)
    hyper_payload = payload.pop("hyperparameters", {})
    if not isinstance(hyper_payload, dict):
        raise ConfigError(f"{where}: hyperparameters must be an object")
    hyper = _from_mapping(Hyperparameters, hyper_payload, f"{where}.hyperparameters")
    allowed = {f.name for f in fields(RunConfig)} - {"hyperparameters"}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return RunConfig(hyperparameters=hyper, **payload)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_run_config(path: str | Path) -> RunConfig:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return run_config_from_dict(payload, where=str(path))


def synthetic_config_from_dict(payload: dict, where: str = "synthetic config") -> SyntheticConfig:
    return _from_mapping(SyntheticConfig, dict(payload), where)


def load_synthetic_config(path: str | Path) -> SyntheticConfig:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return synthetic_config_from_dict(payload, where=str(path))


def hyperparameters_from_dict(payload: dict, where: str = "hyperparameters") -> Hyperparameters:
    return _from_mapping(Hyperparameters, dict(payload), where)


def hyperparameters_to_dict(hyper: Hyperparameters) -> dict:
    return asdict(hyper)
