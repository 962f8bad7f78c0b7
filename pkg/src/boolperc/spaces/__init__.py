"""Metric measure space backends and JSON construction."""

from ..errors import ConfigurationError
from .base import MeasureInterval, Space, SpaceDescriptor, measure_value
from .discrete import DiscretePoint, DiscreteSpace
from .dyadic import DyadicPoint, DyadicSpace
from .euclidean import (BUILTIN_DENSITIES, Density, EuclideanPoint, EuclideanSpace, WeightedEuclideanSpace,
                        WeightedPoint)
from .gasket import GasketPoint, GasketSpace
from .snowflake import SnowflakePoint, SnowflakeSpace

__all__ = [
    "BUILTIN_DENSITIES", "Density", "DiscretePoint", "DiscreteSpace", "DyadicPoint", "DyadicSpace",
    "EuclideanPoint", "EuclideanSpace", "GasketPoint", "GasketSpace", "MeasureInterval", "SnowflakePoint",
    "SnowflakeSpace", "Space", "SpaceDescriptor", "WeightedEuclideanSpace", "WeightedPoint",
    "measure_value", "space_from_json",
]


def space_from_json(desc: dict) -> Space:
    """Build a space from ``{"kind": ..., "dim": n, "alpha": a, "base": {...}, "density": name}``."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigurationError(f"space descriptor needs a 'kind': {desc!r}")
    kind = desc["kind"]
    extra = {"sigma": desc["sigma"]} if "sigma" in desc else {}
    if kind == "euclidean":
        return EuclideanSpace(int(desc.get("dim", 2)), **extra)
    if kind == "weighted":
        return WeightedEuclideanSpace(int(desc.get("dim", 2)), desc.get("density", "periodic"), **extra)
    if kind == "dyadic":
        return DyadicSpace(**extra)
    if kind == "gasket":
        return GasketSpace(**extra)
    if kind == "snowflake":
        if "base" not in desc or "alpha" not in desc:
            raise ConfigurationError("snowflake needs 'base' and 'alpha'")
        return SnowflakeSpace(space_from_json(desc["base"]), float(desc["alpha"]), **extra)
    if kind == "discrete":
        return DiscreteSpace(desc.get("points", [0.0, 1.0]), **extra)
    raise ConfigurationError(f"unknown space kind {kind!r}")
