"""Helpers shared by the experiments."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, HypothesisViolation
from ..family import UniformFamily, assemble_closed
from ..lattice import Region
from ..models import build_model
from ..superop import fixed_point

FamilyFactory = Callable[[object], UniformFamily]


def family_factory(family) -> FamilyFactory:
    """``size -> UniformFamily``; accepts a callable, a model name or a built family."""
    if callable(family) and not isinstance(family, UniformFamily):
        return family
    if isinstance(family, str):
        return lambda size: build_model(family, size=size)
    if isinstance(family, UniformFamily):
        if family.spec is None:
            raise DomainError("family has no model spec to rebuild it at other sizes")
        name = family.spec.name
        params = {k: v for k, v in family.spec.parameters.items() if k != "size"}
        cap = family.dim_cap

        def build(size):
            fam = build_model(name, size=size, **params)
            fam.dim_cap = cap
            return fam

        return build
    raise DomainError(f"cannot build a family from {family!r}")


def as_region(family: UniformFamily, sites) -> Region:
    """Region from a Region, a list of ints (chain sites) or a list of coordinates."""
    if isinstance(sites, Region):
        return sites
    return family.lattice.region([tuple(s) if isinstance(s, (list, tuple)) else s for s in sites])


def unique_fixed_point(family: UniformFamily, region: Region | None = None,
                       method: str = "auto") -> np.ndarray:
    """Fixed point of the closed evolution on ``region``; must be unique."""
    rho, unique = fixed_point(assemble_closed(family, region), method=method)
    if not unique:
        where = "the box" if region is None else str(region)
        raise HypothesisViolation(f"closed evolution of {family.name} on {where} has no unique fixed point")
    return rho


def region_label(region: Region) -> str:
    return "[" + ";".join(",".join(str(v) for v in x) for x in region.sites) + "]"


def family_params(family: UniformFamily) -> dict:
    return dict(family.spec.parameters) if family.spec is not None else {}


def check_grid(values: Sequence[float], name: str) -> list[float]:
    values = [float(v) for v in values]
    if not values or any(v < 0 for v in values) or values != sorted(values):
        raise DomainError(f"{name} must be a nonempty increasing list of nonnegative numbers")
    return values
