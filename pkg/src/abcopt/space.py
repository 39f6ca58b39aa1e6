"""Mixed-type hyperparameter search spaces and candidate vectors.

Provides:
- ParamSpec: a single continuous, integer, or categorical dimension
- SearchSpace: an ordered collection of dimensions with sampling,
  embedding into the unit box, repair of raw real vectors, and
  opposite-point generation
- FoodSource: a candidate vector together with its objective value,
  fitness score, and failure (trial) counter

Continuous and integer dimensions embed to one normalized coordinate in
[0, 1]; a categorical dimension of c categories embeds to c one-hot
coordinates, so any two distinct categories sit at the same distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

Value = Union[float, int, str]
Position = tuple[Value, ...]

KINDS = ("continuous", "integer", "categorical")


def fitness_from_objective(f: float) -> float:
    """Map a raw objective value (minimized) to a positive fitness score.

    Objectives at or above zero map to 1/(1+f); negative objectives map
    to 1+|f|. Lower objectives always score strictly higher, and the
    result is always positive (above 1 exactly when f is negative).
    """
    f = float(f)
    if not math.isfinite(f):
        raise ValueError(f"objective must be finite, got {f!r}")
    if f >= 0:
        return 1.0 / (1.0 + f)
    return 1.0 + abs(f)


def _round_half_up(x: float) -> int:
    # ties round toward +inf, independent of evaluation order
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ParamSpec:
    """One hyperparameter dimension.

    Attributes:
        name: Unique identifier within a search space.
        kind: "continuous", "integer", or "categorical".
        lower: Inclusive lower bound (numeric kinds only).
        upper: Inclusive upper bound (numeric kinds only; strictly above lower).
        categories: Ordered distinct labels (categorical only).

    A degenerate numeric dimension (lower == upper) is rejected: both the
    random-sampling and opposite-point formulas collapse on it, so failing
    at construction beats silently producing a constant.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("param name must be a non-empty string")
        if self.kind not in KINDS:
            raise ValueError(f"param {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if self.lower is not None or self.upper is not None:
                raise ValueError(f"param {self.name!r}: categorical takes no bounds")
            if not self.categories:
                raise ValueError(f"param {self.name!r}: categories must be non-empty")
            cats = tuple(self.categories)
            if len(set(cats)) != len(cats):
                raise ValueError(f"param {self.name!r}: categories must be distinct")
            object.__setattr__(self, "categories", cats)
            return
        if self.categories is not None:
            raise ValueError(f"param {self.name!r}: categories only valid for categorical kind")
        if self.lower is None or self.upper is None:
            raise ValueError(f"param {self.name!r}: numeric kinds require lower and upper")
        lower, upper = float(self.lower), float(self.upper)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValueError(f"param {self.name!r}: bounds must be finite")
        if not lower < upper:
            raise ValueError(
                f"param {self.name!r}: lower must be strictly below upper "
                f"(got {lower} >= {upper})"
            )
        if self.kind == "integer" and not (lower.is_integer() and upper.is_integer()):
            raise ValueError(f"param {self.name!r}: integer bounds must be whole numbers")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> int:
        """Number of embedded coordinates this dimension occupies."""
        return len(self.categories) if self.kind == "categorical" else 1

    def contains(self, value: Value) -> bool:
        if self.kind == "categorical":
            return value in self.categories
        if isinstance(value, str):
            return False
        if self.kind == "integer" and not float(value).is_integer():
            return False
        return self.lower <= value <= self.upper

    def sample(self, rng: np.random.Generator) -> Value:
        """Draw one uniform value for this dimension."""
        if self.kind == "continuous":
            return self.lower + rng.random() * (self.upper - self.lower)
        if self.kind == "integer":
            # direct draw keeps every integer equally likely, which the
            # affine-then-round route would not
            return self.repair_raw(int(rng.integers(int(self.lower), int(self.upper) + 1)))
        return self.categories[int(rng.integers(len(self.categories)))]

    def repair_raw(self, raw: Value) -> Value:
        """Map one raw per-dimension value to a valid value.

        Numeric kinds clamp to the bounds; integer additionally rounds
        half-up. A categorical dimension keeps a valid label as-is and
        treats a real number as a category index (clamped, rounded half-up).
        """
        if self.kind == "categorical":
            if isinstance(raw, str):
                if raw not in self.categories:
                    raise ValueError(f"param {self.name!r}: unknown category {raw!r}")
                return raw
            idx = _round_half_up(min(max(float(raw), 0.0), len(self.categories) - 1.0))
            return self.categories[idx]
        value = min(max(float(raw), self.lower), self.upper)
        if self.kind == "integer":
            return _round_half_up(value)
        return value

    def oppose_value(self, value: Value) -> Value:
        """Reflect a value across the dimension's midpoint.

        Numeric kinds use upper + lower - x; a categorical index i maps to
        (c - 1) - i, the reflection of the index range. Either form is its
        own inverse on valid values.
        """
        if self.kind == "categorical":
            return self.categories[len(self.categories) - 1 - self.categories.index(value)]
        return self.repair_raw(self.upper + self.lower - value)

    def embed_value(self, value: Value) -> list[float]:
        """Coordinates of a valid value in the embedded unit box."""
        if self.kind == "categorical":
            coords = [0.0] * len(self.categories)
            coords[self.categories.index(value)] = 1.0
            return coords
        return [(float(value) - self.lower) / (self.upper - self.lower)]

    def unembed(self, coords: Sequence[float]) -> Value:
        """Valid value nearest to a block of embedded coordinates.

        Categorical blocks take the category with the largest coordinate,
        ties going to the lowest index.
        """
        if self.kind == "categorical":
            return self.categories[int(np.argmax(coords))]
        return self.repair_raw(self.lower + float(coords[0]) * (self.upper - self.lower))


@dataclass(frozen=True)
class FoodSource:
    """A candidate vector with optional evaluation results.

    Attributes:
        position: One value per search-space dimension.
        objective: Raw objective value (minimized), if evaluated.
        fitness: Derived score; present exactly when objective is, computed
            by fitness_from_objective.
        trials: Consecutive failed improvement attempts for this source.
    """

    position: Position
    objective: float | None = None
    fitness: float | None = None
    trials: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", tuple(self.position))
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if self.objective is None:
            if self.fitness is not None:
                raise ValueError("fitness requires an objective value")
            return
        expected = fitness_from_objective(self.objective)
        if self.fitness is None:
            object.__setattr__(self, "fitness", expected)
        elif self.fitness != expected:
            raise ValueError(
                f"fitness {self.fitness!r} inconsistent with objective {self.objective!r}"
            )

    @property
    def evaluated(self) -> bool:
        return self.objective is not None


def _position_of(src: FoodSource | Sequence[Value]) -> Position:
    if isinstance(src, FoodSource):
        return src.position
    return tuple(src)


class SearchSpace:
    """An ordered list of dimensions with unique names.

    Positions produced from a space are tuples with one entry per
    dimension: floats for continuous, ints for integer, labels for
    categorical. All operations are pure given an explicit rng; spaces
    and positions are immutable and safe to share across threads.
    """

    def __init__(self, params: Sequence[ParamSpec]):
        params = tuple(params)
        if not params:
            raise ValueError("search space needs at least one dimension")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate param names: {', '.join(dupes)}")
        self.params = params

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def embedded_width(self) -> int:
        return sum(p.width for p in self.params)

    def __repr__(self) -> str:
        parts = []
        for p in self.params:
            if p.kind == "categorical":
                parts.append(f"{p.name}{{{','.join(p.categories)}}}")
            else:
                parts.append(f"{p.name}[{p.lower},{p.upper}]")
        return f"SearchSpace({', '.join(parts)})"

    def validate(self, position: Sequence[Value]) -> None:
        """Raise ValueError if the position does not fit this space."""
        position = tuple(position)
        if len(position) != self.dimension:
            raise ValueError(
                f"position has {len(position)} components, space has {self.dimension}"
            )
        for spec, value in zip(self.params, position):
            if not spec.contains(value):
                raise ValueError(f"param {spec.name!r}: invalid value {value!r}")

    def contains(self, position: Sequence[Value]) -> bool:
        try:
            self.validate(position)
        except ValueError:
            return False
        return True

    def sample_uniform(self, rng: np.random.Generator) -> Position:
        """Draw a uniform position, one dimension at a time in order."""
        return tuple(p.sample(rng) for p in self.params)

    def embed(self, src: FoodSource | Sequence[Value]) -> np.ndarray:
        """Map a valid position into the embedded unit box.

        Numeric dimensions contribute one normalized coordinate each;
        categorical dimensions contribute a one-hot block.
        """
        position = _position_of(src)
        coords: list[float] = []
        for spec, value in zip(self.params, position):
            coords.extend(spec.embed_value(value))
        return np.asarray(coords, dtype=float)

    def repair(self, raw: Sequence[Value]) -> Position:
        """Per-dimension repair: clamp numerics, round integers half-up.

        Input has one entry per dimension, in original units. Idempotent:
        repairing an already-valid position returns it unchanged.
        """
        raw = tuple(raw)
        if len(raw) != self.dimension:
            raise ValueError(
                f"raw vector has {len(raw)} components, space has {self.dimension}"
            )
        return tuple(spec.repair_raw(v) for spec, v in zip(self.params, raw))

    def repair_embedded(self, vec: Sequence[float]) -> Position:
        """Map an embedded-width real vector back to a valid position."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.embedded_width,):
            raise ValueError(
                f"embedded vector has shape {vec.shape}, expected ({self.embedded_width},)"
            )
        position: list[Value] = []
        offset = 0
        for spec in self.params:
            position.append(spec.unembed(vec[offset : offset + spec.width]))
            offset += spec.width
        return tuple(position)

    def oppose(self, src: FoodSource | Sequence[Value]) -> Position:
        """Position mirrored across the midpoint of every dimension.

        An involution on valid positions: opposing twice returns the
        original position (numeric dimensions up to float rounding).
        """
        position = _position_of(src)
        return tuple(spec.oppose_value(v) for spec, v in zip(self.params, position))

    def to_wire(self) -> list[dict]:
        """Dimension descriptions for the external-evaluator handshake."""
        out = []
        for p in self.params:
            if p.kind == "categorical":
                out.append({"name": p.name, "kind": p.kind, "categories": list(p.categories)})
            else:
                out.append({"name": p.name, "kind": p.kind, "lower": p.lower, "upper": p.upper})
        return out

    def params_dict(self, position: Sequence[Value]) -> dict[str, Value]:
        """Name-to-value mapping with JSON-clean scalar types."""
        position = _position_of(position)
        out: dict[str, Value] = {}
        for spec, value in zip(self.params, position):
            if spec.kind == "continuous":
                out[spec.name] = float(value)
            elif spec.kind == "integer":
                out[spec.name] = int(value)
            else:
                out[spec.name] = value
        return out

    @classmethod
    def from_dicts(cls, entries: Sequence[dict]) -> "SearchSpace":
        """Build a space from plain dicts, e.g. a parsed config block."""
        specs = []
        for entry in entries:
            entry = dict(entry)
            categories = entry.pop("categories", None)
            spec = ParamSpec(
                name=entry.pop("name", None),
                kind=entry.pop("kind", None),
                lower=entry.pop("lower", None),
                upper=entry.pop("upper", None),
                categories=tuple(categories) if categories is not None else None,
            )
            if entry:
                raise ValueError(f"param {spec.name!r}: unknown keys {sorted(entry)}")
            specs.append(spec)
        return cls(specs)
