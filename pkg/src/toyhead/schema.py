"""Feature design space: the registry of named, typed, range-bounded attributes.

The four core condition signals (identity embedding, datum-space head points,
albedo coefficients, illumination coefficients) are always present. Extra
features (hair color, ...) are registered on top and become both model inputs
and label entries. Derived entries (2D landmark projections) are label-only
and never fed to the model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

SCHEMA_FORMAT = "metahead-toy-schema/1"

CORE_IDENTITY = "identity"
CORE_HEADPOINTS = "headpoints_3d"
CORE_ALBEDO = "albedo"
CORE_ILLUMINATION = "illumination"
CORE_NAMES = (CORE_IDENTITY, CORE_HEADPOINTS, CORE_ALBEDO, CORE_ILLUMINATION)


class SchemaError(ValueError):
    """Raised when codes or labels do not match the registered schema."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"schema field '{name}': {message}")


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    shape: tuple[int, ...]
    low: float
    high: float
    default: np.ndarray
    kind: str = "code"  # "code": model input; "derived": label-only

    def __post_init__(self):
        default = np.asarray(self.default, dtype=np.float64).reshape(self.shape)
        if not np.isfinite(default).all():
            raise SchemaError(self.name, "default must be finite")
        if default.min() < self.low or default.max() > self.high:
            raise SchemaError(self.name, "default outside declared range")
        if self.kind not in ("code", "derived"):
            raise SchemaError(self.name, f"unknown kind {self.kind!r}")
        object.__setattr__(self, "default", default)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "shape": list(self.shape),
            "low": self.low,
            "high": self.high,
            "default": [float(v) for v in self.default.reshape(-1)],
            "kind": self.kind,
        }

    @staticmethod
    def from_json(d: dict) -> "FeatureEntry":
        return FeatureEntry(
            name=d["name"],
            shape=tuple(d["shape"]),
            low=float(d["low"]),
            high=float(d["high"]),
            default=np.array(d["default"], dtype=np.float64).reshape(tuple(d["shape"])),
            kind=d.get("kind", "code"),
        )


@dataclass(frozen=True)
class FeatureSchema:
    entries: tuple[FeatureEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names in schema")
        for core in CORE_NAMES:
            if core not in names:
                raise SchemaError(core, "core signal missing from schema")

    @property
    def version(self) -> str:
        payload = json.dumps([e.to_json() for e in self.entries], sort_keys=True)
        digest = hashlib.sha256(payload.encode()).hexdigest()[:12]
        return f"{SCHEMA_FORMAT}:{digest}"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def entry(self, name: str) -> FeatureEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise SchemaError(name, "not registered")

    def code_entries(self) -> tuple[FeatureEntry, ...]:
        return tuple(e for e in self.entries if e.kind == "code")

    @property
    def code_dim(self) -> int:
        return sum(e.dim for e in self.code_entries())

    def code_slices(self) -> dict[str, slice]:
        out, off = {}, 0
        for e in self.code_entries():
            out[e.name] = slice(off, off + e.dim)
            off += e.dim
        return out

    def default_flat(self) -> np.ndarray:
        return np.concatenate([e.default.reshape(-1) for e in self.code_entries()])

    def register(self, name: str, shape, low: float, high: float, default=None, kind: str = "code") -> "FeatureSchema":
        """New schema with one more feature; rejects duplicates."""
        if name in self.names:
            raise SchemaError(name, "already registered")
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        if default is None:
            default = np.full(shape, (low + high) / 2.0)
        return FeatureSchema(self.entries + (FeatureEntry(name, shape, low, high, default, kind),))

    def to_json(self) -> dict:
        return {"format": SCHEMA_FORMAT, "entries": [e.to_json() for e in self.entries]}

    @staticmethod
    def from_json(d: dict) -> "FeatureSchema":
        if d.get("format") != SCHEMA_FORMAT:
            raise ValueError(f"unsupported schema format {d.get('format')!r}")
        return FeatureSchema(tuple(FeatureEntry.from_json(e) for e in d["entries"]))


def register_feature(schema: FeatureSchema, name: str, dim, low: float, high: float, default=None) -> FeatureSchema:
    """Add a controllable attribute to the feature design space."""
    return schema.register(name, dim, low, high, default, kind="code")


@dataclass
class ConditionCodes:
    """The decoupled prior signals, stored flat in schema order.

    `flat` concatenates every kind=="code" entry; named views slice into it.
    """

    schema: FeatureSchema
    flat: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.flat is None:
            self.flat = self.schema.default_flat()
        self.flat = np.asarray(self.flat, dtype=np.float64).reshape(-1)
        if self.flat.shape[0] != self.schema.code_dim:
            raise SchemaError(
                "flat", f"expected dim {self.schema.code_dim}, got {self.flat.shape[0]}"
            )
        if not np.isfinite(self.flat).all():
            raise SchemaError("flat", "codes must be finite")

    def get(self, name: str) -> np.ndarray:
        e = self.schema.entry(name)
        if e.kind != "code":
            raise SchemaError(name, "not a code entry")
        return self.flat[self.schema.code_slices()[name]].reshape(e.shape)

    def replace(self, name: str, value) -> "ConditionCodes":
        e = self.schema.entry(name)
        value = np.asarray(value, dtype=np.float64).reshape(-1)
        if value.shape[0] != e.dim:
            raise SchemaError(name, f"expected {e.dim} values, got {value.shape[0]}")
        if not np.isfinite(value).all():
            raise SchemaError(name, "value must be finite")
        if value.min() < e.low - 1e-9 or value.max() > e.high + 1e-9:
            raise SchemaError(name, f"value outside range [{e.low}, {e.high}]")
        flat = self.flat.copy()
        flat[self.schema.code_slices()[name]] = value
        return ConditionCodes(self.schema, flat)

    @property
    def identity(self) -> np.ndarray:
        return self.get(CORE_IDENTITY)

    @property
    def headpoints(self) -> np.ndarray:
        return self.get(CORE_HEADPOINTS)

    @property
    def albedo(self) -> np.ndarray:
        return self.get(CORE_ALBEDO)

    @property
    def illumination(self) -> np.ndarray:
        return self.get(CORE_ILLUMINATION)

    @property
    def extras(self) -> dict[str, np.ndarray]:
        return {
            e.name: self.get(e.name)
            for e in self.schema.code_entries()
            if e.name not in CORE_NAMES
        }

    @staticmethod
    def from_parts(schema: FeatureSchema, **parts) -> "ConditionCodes":
        codes = ConditionCodes(schema)
        for name, value in parts.items():
            codes = codes.replace(name, value)
        return codes


@dataclass
class LabelRecord:
    """Named feature labels attached to an image."""

    schema_version: str
    entries: dict[str, np.ndarray]

    def validate(self, schema: FeatureSchema):
        if self.schema_version != schema.version:
            raise SchemaError("schema_version", f"{self.schema_version} != {schema.version}")
        for name, value in self.entries.items():
            e = schema.entry(name)
            value = np.asarray(value, dtype=np.float64)
            if value.reshape(-1).shape[0] != e.dim:
                raise SchemaError(name, f"expected {e.dim} values, got {value.size}")
            finite = value[np.isfinite(value)]
            if finite.size and (finite.min() < e.low - 1e-9 or finite.max() > e.high + 1e-9):
                raise SchemaError(name, f"label outside range [{e.low}, {e.high}]")

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "entries": {
                k: np.asarray(v, dtype=np.float64).tolist() for k, v in sorted(self.entries.items())
            },
        }

    @staticmethod
    def from_json(d: dict) -> "LabelRecord":
        return LabelRecord(
            schema_version=d["schema_version"],
            entries={k: np.array(v, dtype=np.float64) for k, v in d["entries"].items()},
        )
