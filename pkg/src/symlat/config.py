"""Experiment configuration: flat ``key = value`` sections parsed strictly.

See ``configs/`` in the repository root for annotated examples of every
experiment kind.  Parse errors report the file line where possible; semantic
errors name the offending section and key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .builders import icosahedral_axes, c2xc2_lattice, cyclic_chain_lattice, \
    d4_lattice, d4_pixel_lattice, sl3_extended_lattice, so3_axes_lattice
from .errors import ConfigError

EXPERIMENT_KINDS = ("power-curve", "group-recovery", "estimator-compare", "search")
TEST_NAMES = ("exceedance", "permutation")


@dataclass
class TestSettings:
    __test__ = False  # not a pytest class, despite the name

    types: tuple[str, ...] = ("exceedance", "permutation")
    alpha: float = 0.05
    m: int | None = None              # None means "n"
    thresholds: tuple[float, ...] | None = None   # None means the auto grid
    grid_size: int = 20
    lipschitz: float = 1.0
    exponent: float = 1.0
    noise_sigma: float | None = None  # defaults to the scenario's sigma
    q: float = 0.95
    B: int = 100
    perm_m: int | None = None         # None means "n"

    def m_for(self, n: int) -> int:
        return n if self.m is None else self.m

    def perm_m_for(self, n: int) -> int:
        return n if self.perm_m is None else self.perm_m


@dataclass
class LatticeSettings:
    builder: str = "cyclic-chain"
    orders: tuple[int, ...] = (1, 2, 4)
    dim: int = 2
    side: int = 28
    axes: str | tuple[tuple[float, float, float], ...] = "icosahedral"
    include_top: bool = True
    angle_std: float | None = None


@dataclass
class SearchSettings:
    algorithm: str = "breadth"
    tie_rule: str = "uniform-random"
    test: str = "exceedance"
    batch: bool = False
    oracle_reject: tuple[str, ...] = ()


@dataclass
class DataSettings:
    source: str = "scenario"
    path: str = ""
    images: str = ""
    labels: str = ""
    response: str = "y"
    n: int = 200


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 20240817
    replicates: int = 100
    sample_sizes: tuple[int, ...] = (100,)
    test_size: int | None = None       # held-out rows for estimator comparison
    out: str = "results"
    jobs: int = 1
    fmt: str = "both"
    scenario_id: str = "fd-rotation"
    scenario_dim: int | None = None
    scenario_sigma: float | None = None
    test: TestSettings = field(default_factory=TestSettings)
    lattice: LatticeSettings = field(default_factory=LatticeSettings)
    search: SearchSettings = field(default_factory=SearchSettings)
    data: DataSettings = field(default_factory=DataSettings)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n <= 0 for n in sizes) or any(
                b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("sample_sizes must be positive and ascending")
        self.sample_sizes = sizes
        if self.fmt not in ("csv", "svg", "both"):
            raise ConfigError("format must be csv, svg, or both")
        for t in self.test.types:
            if t not in TEST_NAMES:
                raise ConfigError(f"unknown test type {t!r}")


def _get(parser, section, key, conv, default, path):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return conv(raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"{path}: [{section}] {key}: {exc}") from None


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_or_n(raw: str) -> int | None:
    if raw.lower() == "n":
        return None
    return int(raw)


def _floats_or_auto(raw: str) -> tuple[float, ...] | None:
    if raw.lower() == "auto":
        return None
    return tuple(float(v) for v in raw.replace(",", " ").split())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.replace(",", " ").split())


def _words(raw: str) -> tuple[str, ...]:
    return tuple(raw.replace(",", " ").split())


def _axes(raw: str):
    if raw.lower() == "icosahedral":
        return "icosahedral"
    axes = []
    for chunk in raw.split(";"):
        vals = [float(v) for v in chunk.split()]
        if len(vals) != 3:
            raise ValueError(f"axis {chunk!r} is not three numbers")
        axes.append(tuple(vals))
    return tuple(axes)


def _float_expr(raw: str) -> float:
    """Floats plus the handful of constants configs actually want."""
    named = {"1/e": 1.0 / math.e, "pi": math.pi}
    if raw in named:
        return named[raw]
    return float(raw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    if not parser.has_option("experiment", "kind"):
        raise ConfigError(f"{path}: [experiment] needs 'kind'")
    kind = parser.get("experiment", "kind").strip()

    test = TestSettings(
        types=_get(parser, "test", "types", _words, TestSettings.types, path),
        alpha=_get(parser, "test", "alpha", float, 0.05, path),
        m=_get(parser, "test", "m", _int_or_n, None, path),
        thresholds=_get(parser, "test", "thresholds", _floats_or_auto, None, path),
        grid_size=_get(parser, "test", "grid_size", int, 20, path),
        lipschitz=_get(parser, "test", "lipschitz", _float_expr, 1.0, path),
        exponent=_get(parser, "test", "exponent", float, 1.0, path),
        noise_sigma=_get(parser, "test", "noise_sigma", float, None, path),
        q=_get(parser, "test", "q", float, 0.95, path),
        B=_get(parser, "test", "B", int, 100, path),
        perm_m=_get(parser, "test", "perm_m", _int_or_n, None, path),
    )
    lattice = LatticeSettings(
        builder=_get(parser, "lattice", "builder", str, "cyclic-chain", path),
        orders=_get(parser, "lattice", "orders", _ints, (1, 2, 4), path),
        dim=_get(parser, "lattice", "dim", int, 2, path),
        side=_get(parser, "lattice", "side", int, 28, path),
        axes=_get(parser, "lattice", "axes", _axes, "icosahedral", path),
        include_top=_get(parser, "lattice", "include_top", _bool, True, path),
        angle_std=_get(parser, "lattice", "angle_std", float, None, path),
    )
    search = SearchSettings(
        algorithm=_get(parser, "search", "algorithm", str, "breadth", path),
        tie_rule=_get(parser, "search", "tie_rule", str, "uniform-random", path),
        test=_get(parser, "search", "test", str, "exceedance", path),
        batch=_get(parser, "search", "batch", _bool, False, path),
        oracle_reject=_get(parser, "search", "oracle_reject", _words, (), path),
    )
    data = DataSettings(
        source=_get(parser, "data", "source", str, "scenario", path),
        path=_get(parser, "data", "path", str, "", path),
        images=_get(parser, "data", "images", str, "", path),
        labels=_get(parser, "data", "labels", str, "", path),
        response=_get(parser, "data", "response", str, "y", path),
        n=_get(parser, "data", "n", int, 200, path),
    )
    try:
        return ExperimentConfig(
            kind=kind,
            seed=_get(parser, "experiment", "seed", int, 20240817, path),
            replicates=_get(parser, "experiment", "replicates", int, 100, path),
            sample_sizes=_get(parser, "experiment", "sample_sizes", _ints, (100,), path),
            test_size=_get(parser, "experiment", "test_size", int, None, path),
            out=_get(parser, "experiment", "out", str, "results", path),
            jobs=_get(parser, "experiment", "jobs", int, 1, path),
            fmt=_get(parser, "experiment", "format", str, "both", path),
            scenario_id=_get(parser, "scenario", "id", str, "fd-rotation", path),
            scenario_dim=_get(parser, "scenario", "dim", int, None, path),
            scenario_sigma=_get(parser, "scenario", "noise_sigma", float, None, path),
            test=test, lattice=lattice, search=search, data=data,
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_lattice(settings: LatticeSettings):
    if settings.builder == "cyclic-chain":
        return cyclic_chain_lattice(settings.orders, dim=settings.dim)
    if settings.builder == "d4":
        return d4_lattice(dim=settings.dim)
    if settings.builder == "d4-pixels":
        return d4_pixel_lattice(settings.side)
    if settings.builder == "c2xc2":
        return c2xc2_lattice(dim=settings.dim)
    if settings.builder in ("so3-axes", "sl3-extended"):
        axes = icosahedral_axes() if settings.axes == "icosahedral" \
            else np.asarray(settings.axes, dtype=float)
        if settings.builder == "so3-axes":
            return so3_axes_lattice(axes, include_top=settings.include_top,
                                    angle_std=settings.angle_std)
        return sl3_extended_lattice(axes, angle_std=settings.angle_std)
    raise ConfigError(f"unknown lattice builder {settings.builder!r}")
