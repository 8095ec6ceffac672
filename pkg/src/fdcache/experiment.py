"""Experiment files, parameter sweeps and CSV results.

An experiment file is flat ``key = value`` text with ``#`` comments.  Every
key has the reference-setting default, so an empty file describes the
reference network at θ = 0 dB.  ``dump_config`` writes the effective
configuration back in the same format; loading that text again yields an
equal ``ExperimentSpec``.
"""

from __future__ import annotations

import csv
import re
import time
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any, Final

import structlog
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from shared.errors import ConfigError, ConfigParseError, FdCacheError, ResultsIOError

from . import analytics, simulator
from .analytics import CacheModel, QuadratureSettings
from .catalog import FileCatalog
from .channel import NetworkParams, UplinkLaw, db_to_linear
from .config import settings
from .simulator import CacheMode, CorrelationMode, HitMode, SimConfig

log = structlog.get_logger(__name__)

PRESETS_DIR: Final = Path(__file__).parent / "presets"
CSV_HEADER: Final = ("sweep_value", "analytic", "sim_mean", "ci95", "trials", "wall_s")
SIGNIFICANT_DIGITS: Final = 10
DEFAULT_KAPPA: Final = 0.35


class SweepVariable(StrEnum):
    ETA = "eta"
    LAMBDA = "lambda"
    KAPPA = "kappa"
    THETA_DB = "theta_db"


class Outputs(StrEnum):
    ANALYTIC = "analytic"
    SIMULATED = "simulated"
    BOTH = "both"

    @property
    def analytic(self) -> bool:
        return self is not Outputs.SIMULATED

    @property
    def simulated(self) -> bool:
        return self is not Outputs.ANALYTIC


class Metric(StrEnum):
    P_HIT = "p_hit"
    P_SUC = "p_suc"
    TG_FD = "tg_fd"
    ASE = "ase"


def _parse_list(value: object) -> object:
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",")]
        return tuple(float(item) for item in items if item)
    return value


FloatList = Annotated[tuple[float, ...], BeforeValidator(_parse_list)]


def _strictly_increasing(values: tuple[float, ...]) -> bool:
    return all(b > a for a, b in zip(values, values[1:], strict=False))


class ExperimentFile(BaseModel):
    """Flat view of an experiment file: one field per key, keys as aliases."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    name: str = Field(default="experiment", pattern=r"^[A-Za-z0-9_.-]+$")

    # --- Catalog and caching policy ---
    catalog_size: int = Field(default=100, alias="F", ge=1)
    gamma: float = 0.7
    eta: float = 1.0
    kappa: float | None = None
    storage: int | None = Field(default=None, alias="S")
    request_radius: float = Field(default=8.0, alias="R_R")
    cache_radius: float = Field(default=40.0, alias="R_C")

    # --- Network ---
    sc_density: float = Field(default=1e-4, alias="lambda")
    r_ul: float = Field(default=20.0, alias="R_UL")
    r_dl: float = Field(default=5.0, alias="R_DL")
    rho_ul: float = Field(default=1.0, alias="rho_UL")
    rho_dl: float = Field(default=0.2, alias="rho_DL")
    alpha1: float = 3.0
    alpha2: float = 4.0
    k_factor: float = Field(default=1.0, alias="K")
    si_attenuation_db: float = 80.0
    theta_db: float = Field(default=0.0, ge=-300.0, le=300.0)

    # --- Simulation ---
    trials: int = 10_000
    window_radius: float = Field(default_factory=lambda: settings.window_radius)
    mode: CorrelationMode = CorrelationMode.CORRELATED
    cache_mode: CacheMode = CacheMode.THINNED
    hit_mode: HitMode = HitMode.INDEPENDENT
    sc_uplink: UplinkLaw = UplinkLaw.PHYSICAL
    seed: int = 0
    workers: int = Field(default_factory=lambda: settings.workers)

    # --- Sweep ---
    sweep: SweepVariable = SweepVariable.THETA_DB
    values: FloatList = (0.0,)
    outputs: Outputs = Outputs.BOTH
    metric: Metric = Metric.P_SUC
    series: SweepVariable | None = None
    series_values: FloatList = ()

    @field_validator("series", mode="before")
    @classmethod
    def _blank_is_none(cls, value: object) -> object:
        return None if value in ("", "none") else value

    @model_validator(mode="after")
    def _check_storage(self) -> ExperimentFile:
        if self.kappa is not None and self.storage is not None:
            raise ValueError("set either kappa or S, not both")
        return self

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(info.alias or name for name, info in cls.model_fields.items())

    def with_value(self, variable: SweepVariable, value: float) -> ExperimentFile:
        """Copy with one sweep variable set, validated like a parsed file."""
        data = self.model_dump(by_alias=True)
        data[variable.value] = value
        if variable is SweepVariable.KAPPA:
            data["S"] = None
        return ExperimentFile.model_validate(data)

    def cache(self) -> CacheModel:
        if self.storage is not None:
            return CacheModel(
                storage=self.storage,
                request_radius=self.request_radius,
                cache_radius=self.cache_radius,
                catalog_size=self.catalog_size,
            )
        return CacheModel.from_kappa(
            DEFAULT_KAPPA if self.kappa is None else self.kappa,
            self.catalog_size,
            request_radius=self.request_radius,
            cache_radius=self.cache_radius,
        )

    def sim_config(self) -> SimConfig:
        params = NetworkParams(
            sc_density=self.sc_density,
            r_ul=self.r_ul,
            r_dl=self.r_dl,
            rho_ul=self.rho_ul,
            rho_dl=self.rho_dl,
            alpha1=self.alpha1,
            alpha2=self.alpha2,
            k_factor=self.k_factor,
            si_attenuation_db=self.si_attenuation_db,
        )
        return SimConfig(
            params=params,
            catalog=FileCatalog(size=self.catalog_size, gamma=self.gamma, eta=self.eta),
            cache=self.cache(),
            theta=db_to_linear(self.theta_db),
            trials=self.trials,
            window_radius=self.window_radius,
            mode=self.mode,
            cache_mode=self.cache_mode,
            hit_mode=self.hit_mode,
            sc_uplink=self.sc_uplink,
            seed=self.seed,
            workers=self.workers,
        )


class ExperimentSpec(BaseModel):
    """Validated experiment: base configuration plus the sweep it runs."""

    model_config = ConfigDict(frozen=True)

    name: str
    base: SimConfig
    sweep: SweepVariable
    values: tuple[float, ...]
    outputs: Outputs = Outputs.BOTH
    metric: Metric = Metric.P_SUC
    series: SweepVariable | None = None
    series_values: tuple[float, ...] = ()
    source: ExperimentFile

    @model_validator(mode="after")
    def _check_sweeps(self) -> ExperimentSpec:
        if not self.values:
            raise ValueError("sweep values must not be empty")
        if not _strictly_increasing(self.values):
            raise ValueError("sweep values must be strictly increasing")
        if self.series is None:
            if self.series_values:
                raise ValueError("series_values given without a series variable")
            return self
        if self.series is self.sweep:
            raise ValueError("series variable must differ from the sweep variable")
        if not self.series_values or not _strictly_increasing(self.series_values):
            raise ValueError("series values must be nonempty and strictly increasing")
        return self

    @classmethod
    def from_file(cls, entries: ExperimentFile) -> ExperimentSpec:
        spec = cls(
            name=entries.name,
            base=entries.sim_config(),
            sweep=entries.sweep,
            values=entries.values,
            outputs=entries.outputs,
            metric=entries.metric,
            series=entries.series,
            series_values=entries.series_values,
            source=entries,
        )
        # every point must validate before anything runs
        for entry in spec.points():
            entry.sim_config()
        return spec

    def series_points(self) -> list[tuple[float | None, ExperimentFile]]:
        if self.series is None:
            return [(None, self.source)]
        return [(v, self.source.with_value(self.series, v)) for v in self.series_values]

    def points(self) -> list[ExperimentFile]:
        return [
            entries.with_value(self.sweep, value)
            for _, entries in self.series_points()
            for value in self.values
        ]


@dataclass(frozen=True, slots=True)
class ResultRow:
    """One sweep point.  Numbers are rounded to the precision written to CSV."""

    sweep_value: float
    analytic: float | None
    sim_mean: float | None
    ci95: float | None
    trials: int | None
    wall_s: float
    series_value: float | None = None


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------


def _read_entries(path: Path) -> tuple[dict[str, str], dict[str, str]]:
    """Raw ``key -> value`` strings and ``key -> "path:line"`` locations."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read experiment file {path}: {exc.strerror or exc}") from exc

    known = set(ExperimentFile.keys())
    entries: dict[str, str] = {}
    where: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigParseError(path, lineno, f"expected 'key = value', got {raw.strip()!r}")
        if key not in known:
            raise ConfigParseError(path, lineno, f"unknown key {key!r}")
        if key in entries:
            raise ConfigParseError(path, lineno, f"duplicate key {key!r} (first at {where[key]})")
        entries[key] = value.strip()
        where[key] = f"{path}:{lineno}"
    return entries, where


def _mentioned_key(message: str) -> str | None:
    """Longest experiment key named as a word in ``message``."""
    for key in sorted(ExperimentFile.keys(), key=len, reverse=True):
        if re.search(rf"\b{re.escape(key)}\b", message):
            return key
    return None


def _describe(exc: ValidationError, where: dict[str, str], fallback: str) -> ConfigError:
    first = exc.errors()[0]
    loc = [str(part) for part in first["loc"]]
    # model-level validators name the field in their message instead of loc
    key = next((part for part in loc if part in where), None) or _mentioned_key(first["msg"])
    location = where.get(key, fallback) if key is not None else fallback
    field = key or ".".join(loc) or "config"
    return ConfigError(f"{location}: invalid {field}: {first['msg']}")


def _build(entries: dict[str, Any], where: dict[str, str], fallback: str) -> ExperimentSpec:
    try:
        return ExperimentSpec.from_file(ExperimentFile.model_validate(entries))
    except ValidationError as exc:
        raise _describe(exc, where, fallback) from exc
    except FdCacheError as exc:
        raise ConfigError(f"{fallback}: {exc}") from exc


def load_config(path: Path | str, *, base: Path | str | None = None) -> ExperimentSpec:
    """Parse and validate an experiment file; unknown keys are rejected.

    With ``base`` (a preset file), its entries come first and ``path``
    overrides them key by key.
    """
    path = Path(path)
    entries: dict[str, str] = {}
    where: dict[str, str] = {}
    if base is not None:
        entries, where = _read_entries(Path(base))
    overrides, override_where = _read_entries(path)
    if "kappa" in overrides:
        entries.pop("S", None)
    if "S" in overrides:
        entries.pop("kappa", None)
    entries.update(overrides)
    where.update(override_where)
    spec = _build(dict(entries), where, str(path))
    log.debug("config_loaded", path=str(path), base=str(base) if base else None, name=spec.name)
    return spec


def apply_overrides(spec: ExperimentSpec, **updates: Any) -> ExperimentSpec:
    """Copy of ``spec`` with experiment keys replaced (``None`` values are ignored)."""
    data = spec.source.model_dump(by_alias=True)
    data.update({key: value for key, value in updates.items() if value is not None})
    return _build(data, {}, "command line")


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / f"{name}.conf"
    if not path.is_file():
        known = sorted(p.stem for p in PRESETS_DIR.glob("*.conf"))
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(known)}")
    return path


def _format_entry(value: Any) -> str | None:
    if value is None:
        return None
    if isinstance(value, StrEnum):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(spec: ExperimentSpec) -> str:
    """Effective configuration as ``key = value`` text that ``load_config`` reads back."""
    data = spec.source.model_dump(by_alias=True)
    lines = [f"# effective configuration of {spec.name}"]
    for key in ExperimentFile.keys():
        text = _format_entry(data[key])
        if text is not None:
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _round(value: float | None) -> float | None:
    return None if value is None else float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def _analytic_value(metric: Metric, config: SimConfig, quad: QuadratureSettings) -> float:
    p_hit = analytics.cache_hit_probability(config.catalog, config.cache)
    if metric is Metric.P_HIT:
        return p_hit
    p_suc = analytics.success_probability_lb(
        config.theta, p_hit, config.params, quad, sc_uplink=config.sc_uplink
    )
    if metric is Metric.P_SUC:
        return p_suc
    if metric is Metric.TG_FD:
        return analytics.throughput_gain(config.theta, p_suc, config.params)
    return analytics.area_spectral_efficiency(config.theta, p_suc, config.params.sc_density)


_ESTIMATORS: dict[Metric, Callable[[SimConfig], simulator.EstimateWithCI]] = {
    Metric.P_HIT: simulator.estimate_cache_hit,
    Metric.P_SUC: simulator.estimate_success,
    Metric.TG_FD: simulator.estimate_throughput_gain,
    Metric.ASE: simulator.estimate_area_spectral_efficiency,
}


def _run_point(
    spec: ExperimentSpec, entries: ExperimentFile, sweep_value: float, series_value: float | None
) -> ResultRow:
    started = time.perf_counter()
    config = entries.sim_config()
    analytic = (
        _analytic_value(spec.metric, config, settings.quadrature())
        if spec.outputs.analytic
        else None
    )
    estimate = _ESTIMATORS[spec.metric](config) if spec.outputs.simulated else None
    wall = time.perf_counter() - started
    row = ResultRow(
        sweep_value=_round(sweep_value) or 0.0,
        analytic=_round(analytic),
        sim_mean=_round(estimate.mean) if estimate else None,
        ci95=_round(estimate.half_width_95) if estimate else None,
        trials=estimate.trials if estimate else None,
        wall_s=_round(wall) or 0.0,
        series_value=series_value,
    )
    log.info(
        "experiment_point",
        elapsed_s=row.wall_s,
        sweep_value=sweep_value,
        mean=row.sim_mean,
        ci95=row.ci95,
        trials=row.trials,
        analytic=row.analytic,
        series_value=series_value,
    )
    return row


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """One row per (series value, sweep value), in series then sweep order."""
    rows: list[ResultRow] = []
    log.info(
        "experiment_started",
        name=spec.name,
        sweep=spec.sweep.value,
        metric=spec.metric.value,
        points=len(spec.values) * max(1, len(spec.series_values)),
    )
    for series_value, base in spec.series_points():
        for value in spec.values:
            entries = base.with_value(spec.sweep, value)
            try:
                rows.append(_run_point(spec, entries, value, series_value))
            except FdCacheError as exc:
                note = f"at {spec.sweep.value}={value!r}"
                if series_value is not None and spec.series is not None:
                    note += f", {spec.series.value}={series_value!r}"
                exc.add_note(note)
                log.error("experiment_point_failed", sweep_value=value, error=str(exc))
                raise
    return rows


# ---------------------------------------------------------------------------
# CSV results
# ---------------------------------------------------------------------------


def _cell(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def write_results(rows: list[ResultRow], path: Path | str) -> None:
    """Write ``rows`` as CSV with the fixed header; absent values are empty cells."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow(
                    [
                        _cell(row.sweep_value),
                        _cell(row.analytic),
                        _cell(row.sim_mean),
                        _cell(row.ci95),
                        _cell(row.trials),
                        _cell(row.wall_s),
                    ]
                )
    except OSError as exc:
        raise ResultsIOError(path, exc.strerror or str(exc)) from exc
    log.debug("results_written", path=str(path), rows=len(rows))


def _float_or_none(text: str) -> float | None:
    return float(text) if text else None


def read_results(path: Path | str) -> list[ResultRow]:
    """Parse a file written by ``write_results``."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_HEADER:
                raise ResultsIOError(path, f"unexpected header {header!r}")
            return [
                ResultRow(
                    sweep_value=float(sweep),
                    analytic=_float_or_none(analytic),
                    sim_mean=_float_or_none(sim_mean),
                    ci95=_float_or_none(ci95),
                    trials=int(trials) if trials else None,
                    wall_s=float(wall),
                )
                for sweep, analytic, sim_mean, ci95, trials, wall in reader
            ]
    except ResultsIOError:
        raise
    except OSError as exc:
        raise ResultsIOError(path, exc.strerror or str(exc)) from exc
    except ValueError as exc:
        raise ResultsIOError(path, f"malformed row: {exc}") from exc


def series_path(path: Path, series: SweepVariable, value: float) -> Path:
    """``<stem>_<var>=<value><suffix>`` next to ``path``."""
    return path.with_name(f"{path.stem}_{series.value}={value:g}{path.suffix}")
