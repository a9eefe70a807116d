"""Shorthand text forms of processes, domains, measures and potentials.

Each shorthand is reversible: `encode` parses text into the pydantic model,
`decode` prints the model back, so configs can carry either form.

    process   brownian:d=3 | stable:alpha=1.5,d=1 | relativistic:alpha=1,m=1,d=2
    domain    full | ball(0,1) | box(0;0,1;2) | interval(-1,1) | strip:w=1,d=2
              horn:exp,rate=1,d=2 | sublevel:harmonic,M=2,d=2
    measure   lebesgue:<domain> | density:exp_radial,rate=1:<domain>
              sphere:r=1,d=3 | atoms:0;0@1,1;0@0.5
    potential harmonic | constant,scale=2 | radial_power,rate=4 | axis_power,axis=1

Vectors are ';'-separated; a single number is repeated over every coordinate.
The type-dispatching `parse_*` functions accept text, a model instance or a mapping.
"""

import logging
import re
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping
from functools import singledispatch
from typing import Dict, List, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from .geometry import (
    DensityFunction,
    Domain,
    DomainKind,
    MeasureKind,
    MeasureSpec,
    PotentialFunction,
    ProfileFunction,
)
from .kernels import ProcessKind, ProcessSpec
from .utils import ConfigurationError

logger = logging.getLogger(__name__)

_CALL = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*(?::(.*))?$")

Model = TypeVar("Model", bound=BaseModel)


# =============================================================================
# Token helpers
# =============================================================================

def _tokens(text: str) -> Tuple[List[str], Dict[str, str]]:
    """Bare names and key=value pairs of a ','-separated parameter list."""
    names, params = [], {}
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        if "=" in token:
            key, value = token.split("=", 1)
            params[key.strip()] = value.strip()
        else:
            names.append(token)
    return names, params


def _number(text: str, field: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"'{text}' is not a number", field) from None


def _integer(text: str, field: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"'{text}' is not an integer", field) from None


def _vector(text: str, d: Optional[int], field: str) -> List[float]:
    coords = [_number(t, field) for t in text.split(";")]
    if len(coords) == 1 and d:
        coords = coords * d
    if d and len(coords) != d:
        raise ConfigurationError(f"expected {d} coordinates, got {len(coords)}", field)
    return coords


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _fmt_vector(v) -> str:
    v = [float(c) for c in v]
    if len(set(v)) == 1:
        return _fmt(v[0])
    return ";".join(_fmt(c) for c in v)


def _dimension(params: Dict[str, str], d: Optional[int], field: str) -> int:
    if "d" in params:
        value = _integer(params["d"], f"{field}.d")
        if d is not None and value != d:
            raise ConfigurationError(f"dimension {value} conflicts with {d}", f"{field}.d")
        return value
    if d is None:
        raise ConfigurationError("dimension is missing (add d=...)", field)
    return d


def _unknown(params: Dict[str, str], allowed: Tuple[str, ...], field: str) -> None:
    extra = sorted(set(params) - set(allowed))
    if extra:
        raise ConfigurationError(f"unknown parameter(s) {', '.join(extra)}", field)


def validated(model: Type[Model], data: Mapping, field: str) -> Model:
    """model_validate with pydantic errors turned into a ConfigurationError carrying the field path."""
    try:
        return model.model_validate(dict(data))
    except ValidationError as e:
        err = e.errors()[0]
        path = ".".join([field] + [str(p) for p in err["loc"]])
        raise ConfigurationError(err["msg"], path) from None


# =============================================================================
# Reversible shorthands
# =============================================================================

class Shorthand(ABC):
    """Text <-> model conversion for one kind of object."""
    field = ""

    @abstractmethod
    def encode(self, text: str, d: Optional[int] = None):
        """Parse text (with an optional dimension hint) into a model."""

    @abstractmethod
    def decode(self, model) -> str:
        """Print a model back as shorthand text."""

    def __call__(self, text: str, d: Optional[int] = None):
        try:
            return self.encode(text.strip(), d)
        except ValidationError as e:
            err = e.errors()[0]
            raise ConfigurationError(err["msg"], self.field) from None


class ProcessShorthand(Shorthand):
    field = "process"

    def encode(self, text: str, d: Optional[int] = None) -> ProcessSpec:
        head, _, rest = text.partition(":")
        _, params = _tokens(rest)
        try:
            kind = ProcessKind(head.strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown process '{head}'", self.field) from None
        dim = _dimension(params, d, self.field)
        if kind == ProcessKind.BROWNIAN:
            _unknown(params, ("d",), self.field)
            return ProcessSpec.brownian(dim)
        if "alpha" not in params:
            raise ConfigurationError("alpha is missing", f"{self.field}.alpha")
        alpha = _number(params["alpha"], f"{self.field}.alpha")
        if kind == ProcessKind.STABLE:
            _unknown(params, ("alpha", "d"), self.field)
            return ProcessSpec.stable(alpha, dim)
        _unknown(params, ("alpha", "m", "d"), self.field)
        if "m" not in params:
            raise ConfigurationError("m is missing", f"{self.field}.m")
        return ProcessSpec.relativistic(alpha, _number(params["m"], f"{self.field}.m"), dim)

    def decode(self, model: ProcessSpec) -> str:
        if model.kind == ProcessKind.BROWNIAN:
            return f"brownian:d={model.dimension}"
        if model.kind == ProcessKind.STABLE:
            return f"stable:alpha={_fmt(model.alpha)},d={model.dimension}"
        return f"relativistic:alpha={_fmt(model.alpha)},m={_fmt(model.mass)},d={model.dimension}"


class PotentialShorthand(Shorthand):
    field = "potential"

    def encode(self, text: str, d: Optional[int] = None) -> PotentialFunction:
        names, params = _tokens(text)
        _unknown(params, ("scale", "rate", "axis"), self.field)
        data = {"name": names[0] if names else "harmonic"}
        for key in ("scale", "rate"):
            if key in params:
                data[key] = _number(params[key], f"{self.field}.{key}")
        if "axis" in params:
            data["axis"] = _integer(params["axis"], f"{self.field}.axis")
        return validated(PotentialFunction, data, self.field)

    def decode(self, model: PotentialFunction) -> str:
        if model.name == "custom":
            raise ConfigurationError("custom potentials have no text form", self.field)
        parts = [model.name, f"scale={_fmt(model.scale)}", f"rate={_fmt(model.rate)}"]
        if model.name == "axis_power":
            parts.append(f"axis={model.axis}")
        return ",".join(parts)


class DomainShorthand(Shorthand):
    field = "domain"

    def encode(self, text: str, d: Optional[int] = None) -> Domain:
        call = _CALL.match(text)
        if call:
            return self._encode_call(call.group(1).lower(), call.group(2), call.group(3) or "", d)
        head, _, rest = text.partition(":")
        head = head.strip().lower()
        names, params = _tokens(rest)
        if head == "full":
            _unknown(params, ("d",), self.field)
            return Domain.full(_dimension(params, d, self.field))
        if head == "strip":
            _unknown(params, ("w", "axis", "d"), self.field)
            dim = _dimension(params, d, self.field)
            axis = _integer(params.get("axis", str(dim)), f"{self.field}.axis")
            return Domain.strip(dim, axis, _number(params.get("w", "1"), f"{self.field}.w"))
        if head == "horn":
            _unknown(params, ("scale", "rate", "d"), self.field)
            profile = {"name": names[0] if names else "exp"}
            for key in ("scale", "rate"):
                if key in params:
                    profile[key] = _number(params[key], f"{self.field}.{key}")
            return Domain.horn(_dimension(params, d, self.field),
                               validated(ProfileFunction, profile, f"{self.field}.profile"))
        if head == "sublevel":
            _unknown(params, ("M", "scale", "rate", "axis", "d"), self.field)
            if "M" not in params:
                raise ConfigurationError("level M is missing", f"{self.field}.M")
            potential = PotentialShorthand().encode(
                ",".join(names + [f"{k}={params[k]}" for k in ("scale", "rate", "axis") if k in params]))
            return Domain.sublevel(_dimension(params, d, self.field), potential,
                                   _number(params["M"], f"{self.field}.M"))
        raise ConfigurationError(f"unknown domain '{head}'", self.field)

    def _encode_call(self, head: str, args: str, rest: str, d: Optional[int]) -> Domain:
        _, params = _tokens(rest)
        _unknown(params, ("d",), self.field)
        parts = [a.strip() for a in args.split(",")]
        if len(parts) != 2:
            raise ConfigurationError(f"{head}(...) takes two arguments", self.field)
        if head == "interval":
            return Domain.interval(_number(parts[0], self.field), _number(parts[1], self.field))
        if head not in ("ball", "box"):
            raise ConfigurationError(f"unknown domain '{head}'", self.field)
        if "d" in params or d is not None:
            dim = _dimension(params, d, self.field)
        else:
            dim = max(len(p.split(";")) for p in parts) if head == "box" else len(parts[0].split(";"))
        if head == "ball":
            return Domain.ball(_vector(parts[0], dim, f"{self.field}.center"),
                               _number(parts[1], f"{self.field}.radius"))
        return Domain.box(_vector(parts[0], dim, f"{self.field}.lo"), _vector(parts[1], dim, f"{self.field}.hi"))

    def decode(self, model: Domain) -> str:
        k, d = model.kind, model.dimension
        if k == DomainKind.FULL:
            return f"full:d={d}"
        if k == DomainKind.BALL:
            return f"ball({_fmt_vector(model.center)},{_fmt(model.radius)}):d={d}"
        if k == DomainKind.BOX:
            return f"box({_fmt_vector(model.lo)},{_fmt_vector(model.hi)}):d={d}"
        if k == DomainKind.STRIP:
            return f"strip:w={_fmt(model.width)},axis={model.axis},d={d}"
        if k == DomainKind.HORN and model.profile.name != "custom":
            p = model.profile
            return f"horn:{p.name},scale={_fmt(p.scale)},rate={_fmt(p.rate)},d={d}"
        if k == DomainKind.SUBLEVEL and model.potential.name != "custom":
            return f"sublevel:{PotentialShorthand().decode(model.potential)},M={_fmt(model.level)},d={d}"
        raise ConfigurationError(f"{k.value} domains have no text form; use the mapping form", self.field)


class MeasureShorthand(Shorthand):
    field = "measure"

    def encode(self, text: str, d: Optional[int] = None) -> MeasureSpec:
        head, _, rest = text.partition(":")
        head = head.strip().lower()
        domains = DomainShorthand()
        if head == "lebesgue":
            return MeasureSpec.lebesgue(domains(rest or "full", d), label=text)
        if head == "density":
            spec, _, where = rest.partition(":")
            names, params = _tokens(spec)
            _unknown(params, ("scale", "rate", "center"), self.field)
            data = {"name": names[0] if names else "constant"}
            for key in ("scale", "rate"):
                if key in params:
                    data[key] = _number(params[key], f"{self.field}.{key}")
            domain = domains(where or "full", d)
            if "center" in params:
                data["center"] = _vector(params["center"], domain.dimension, f"{self.field}.center")
            return MeasureSpec.with_density(domain, validated(DensityFunction, data, f"{self.field}.density"),
                                            label=text)
        if head == "sphere":
            _, params = _tokens(rest)
            _unknown(params, ("r", "c", "d"), self.field)
            dim = _dimension(params, d, self.field)
            center = _vector(params.get("c", "0"), dim, f"{self.field}.c")
            return MeasureSpec.sphere_surface(center, _number(params.get("r", "1"), f"{self.field}.r"), label=text)
        if head == "atoms":
            atoms = []
            for item in filter(None, (t.strip() for t in rest.split(","))):
                point, _, mass = item.partition("@")
                atoms.append((_vector(point, d, f"{self.field}.atoms"),
                              _number(mass or "1", f"{self.field}.atoms")))
            if not atoms:
                raise ConfigurationError("atoms need at least one point", self.field)
            return MeasureSpec.point_masses(atoms, dimension=d, label=text)
        raise ConfigurationError(f"unknown measure '{head}'", self.field)

    def decode(self, model: MeasureSpec) -> str:
        k = model.kind
        domains = DomainShorthand()
        if k == MeasureKind.LEBESGUE:
            return f"lebesgue:{domains.decode(model.domain)}"
        if k == MeasureKind.DENSITY and model.density.name != "custom":
            g = model.density
            center = "" if g.center is None else f",center={_fmt_vector(g.center)}"
            return f"density:{g.name},scale={_fmt(g.scale)},rate={_fmt(g.rate)}{center}:{domains.decode(model.domain)}"
        if k == MeasureKind.SPHERE_SURFACE:
            return f"sphere:r={_fmt(model.radius)},c={_fmt_vector(model.center)},d={model.dimension}"
        if k == MeasureKind.ATOMS:
            return "atoms:" + ",".join(f"{';'.join(_fmt(c) for c in a.point)}@{_fmt(a.mass)}" for a in model.atoms)
        raise ConfigurationError(f"{k.value} measures have no text form; use the mapping form", self.field)


# =============================================================================
# Type dispatch
# =============================================================================

@singledispatch
def parse_process(value) -> ProcessSpec:
    raise ConfigurationError(f"cannot build a process from {type(value).__name__}", "process")


@parse_process.register
def _(value: ProcessSpec) -> ProcessSpec:
    return value


@parse_process.register
def _(value: str) -> ProcessSpec:
    return ProcessShorthand()(value)


@parse_process.register(Mapping)
def _(value) -> ProcessSpec:
    return validated(ProcessSpec, value, "process")


@singledispatch
def parse_domain(value, d: Optional[int] = None) -> Domain:
    raise ConfigurationError(f"cannot build a domain from {type(value).__name__}", "domain")


@parse_domain.register
def _(value: Domain, d: Optional[int] = None) -> Domain:
    if d is not None and value.dimension != d:
        raise ConfigurationError(f"domain dimension {value.dimension} != {d}", "domain")
    return value


@parse_domain.register
def _(value: str, d: Optional[int] = None) -> Domain:
    return DomainShorthand()(value, d)


@parse_domain.register(Mapping)
def _(value, d: Optional[int] = None) -> Domain:
    return parse_domain(validated(Domain, value, "domain"), d)


@singledispatch
def parse_measure(value, d: Optional[int] = None) -> MeasureSpec:
    raise ConfigurationError(f"cannot build a measure from {type(value).__name__}", "measure")


@parse_measure.register
def _(value: MeasureSpec, d: Optional[int] = None) -> MeasureSpec:
    if d is not None and value.dimension != d:
        raise ConfigurationError(f"measure dimension {value.dimension} != {d}", "measure")
    return value


@parse_measure.register
def _(value: str, d: Optional[int] = None) -> MeasureSpec:
    return MeasureShorthand()(value, d)


@parse_measure.register(Mapping)
def _(value, d: Optional[int] = None) -> MeasureSpec:
    return parse_measure(validated(MeasureSpec, value, "measure"), d)


@singledispatch
def parse_potential(value) -> PotentialFunction:
    raise ConfigurationError(f"cannot build a potential from {type(value).__name__}", "potential")


@parse_potential.register
def _(value: PotentialFunction) -> PotentialFunction:
    return value


@parse_potential.register
def _(value: str) -> PotentialFunction:
    return PotentialShorthand()(value)


@parse_potential.register(Mapping)
def _(value) -> PotentialFunction:
    return validated(PotentialFunction, value, "potential")


@parse_potential.register(Callable)
def _(value) -> PotentialFunction:
    return PotentialFunction.custom(value)


def describe(model) -> str:
    """Shorthand text of a process, domain, measure or potential."""
    for model_type, shorthand in ((ProcessSpec, ProcessShorthand), (Domain, DomainShorthand),
                                  (MeasureSpec, MeasureShorthand), (PotentialFunction, PotentialShorthand)):
        if isinstance(model, model_type):
            return shorthand().decode(model)
    raise ConfigurationError(f"no shorthand for {type(model).__name__}")
