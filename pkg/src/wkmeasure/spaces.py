"""Index-labelled vectors, exponents and coordinate projections.

Everything here is immutable.  Labels are opaque (``int`` or ``str``) and are
always iterated in the order given by :func:`label_key` so that reported sets
and certificates are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

Label = Hashable


def label_key(label):
    """Total order on mixed int/str labels: integers first, then strings."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return (0, int(label), "")
    return (1, 0, str(label))


def sorted_labels(labels: Iterable[Label]) -> tuple:
    return tuple(sorted(set(labels), key=label_key))


def _scalar(value):
    if isinstance(value, complex) or np.iscomplexobj(value):
        value = complex(value)
        if value.imag == 0.0:
            return float(value.real)
        return value
    return float(value)


@dataclass(frozen=True)
class Exponent:
    """A Lebesgue exponent ``p`` in ``(1, inf)`` together with its dual."""

    value: float
    dual: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = float(self.value)
        if not (p > 1.0 and math.isfinite(p)):
            raise ValueError(f"exponent must lie in (1, inf), got {self.value!r}")
        object.__setattr__(self, "value", p)
        object.__setattr__(self, "dual", p / (p - 1.0))

    @classmethod
    def parse(cls, text) -> "Exponent":
        """Accept a decimal string (the file format) or a number."""
        try:
            return cls(float(text))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"invalid exponent {text!r}") from exc

    def conjugate(self) -> "Exponent":
        return Exponent(self.dual)

    @property
    def is_hilbert(self) -> bool:
        return self.value == 2.0

    def __float__(self):
        return self.value


def lp_norm(values: np.ndarray, p: float) -> float:
    """``l^p`` norm of a dense array, ``p`` in ``[1, inf]``; overflow-safe."""
    a = np.abs(np.asarray(values)).ravel()
    if a.size == 0:
        return 0.0
    scale = float(a.max())
    if scale == 0.0:
        return 0.0
    if p == math.inf:
        return scale
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(scale * np.sqrt(np.sum((a / scale) ** 2)))
    return float(scale * np.sum((a / scale) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class FiniteVector:
    """Finitely supported vector ``label -> scalar``; zeros are pruned."""

    entries: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k in sorted_labels(self.entries):
            v = _scalar(self.entries[k])
            if v != 0:
                clean[k] = v
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @classmethod
    def from_dense(cls, values: Sequence, labels: Sequence | None = None) -> "FiniteVector":
        values = np.asarray(values)
        if labels is None:
            labels = range(1, values.size + 1)
        return cls(dict(zip(labels, values.tolist())))

    @property
    def support(self) -> tuple:
        return tuple(self.entries)

    @property
    def is_complex(self) -> bool:
        return any(isinstance(v, complex) for v in self.entries.values())

    def get(self, label, default=0.0):
        return self.entries.get(label, default)

    def values(self, labels: Sequence) -> np.ndarray:
        dtype = complex if self.is_complex else float
        return np.array([self.entries.get(k, 0.0) for k in labels], dtype=dtype)

    def __add__(self, other: "FiniteVector") -> "FiniteVector":
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return FiniteVector(out)

    def __sub__(self, other: "FiniteVector") -> "FiniteVector":
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor) -> "FiniteVector":
        return FiniteVector({k: factor * v for k, v in self.entries.items()})

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class Ambient:
    """Which norm a vector family lives in.

    ``kind`` is one of ``"ell1"`` (optionally weighted: a discrete measure),
    ``"c0"`` (sup norm) or ``"ellp"`` (with ``exponent``).
    """

    kind: str
    exponent: Exponent | None = None
    weights: Mapping | None = None

    def __post_init__(self):
        if self.kind not in ("ell1", "c0", "ellp"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.kind == "ellp" and self.exponent is None:
            raise ValueError("ellp ambient needs an exponent")
        if self.weights is not None:
            if self.kind != "ell1":
                raise ValueError("weights are only meaningful for the ell1 ambient")
            w = {}
            for k in sorted_labels(self.weights):
                val = float(self.weights[k])
                if not val > 0.0:
                    raise ValueError(f"weight of {k!r} must be positive, got {val}")
                w[k] = val
            object.__setattr__(self, "weights", MappingProxyType(w))

    @classmethod
    def ell1(cls, weights: Mapping | None = None) -> "Ambient":
        return cls("ell1", weights=weights)

    @classmethod
    def c0(cls) -> "Ambient":
        return cls("c0")

    @classmethod
    def ellp(cls, p) -> "Ambient":
        return cls("ellp", exponent=p if isinstance(p, Exponent) else Exponent(p))

    def weight(self, label) -> float:
        if self.weights is None:
            return 1.0
        try:
            return self.weights[label]
        except KeyError:
            raise ValueError(f"no weight given for coordinate {label!r}") from None


def vector_norm(x: FiniteVector, ambient: Ambient) -> float:
    """Norm of ``x`` in ``ambient`` (weighted l^1, sup norm or l^p)."""
    if not x.entries:
        return 0.0
    labels = x.support
    vals = np.abs(x.values(labels))
    if ambient.kind == "c0":
        return float(vals.max())
    if ambient.kind == "ell1":
        w = np.array([ambient.weight(k) for k in labels])
        return float(np.sum(w * vals))
    return lp_norm(vals, ambient.exponent.value)


def project(x: FiniteVector, labels: Iterable, mode: str = "keep") -> FiniteVector:
    """Coordinate projection: keep only ``labels`` or drop them."""
    keep = set(labels)
    if mode == "keep":
        return FiniteVector({k: v for k, v in x.entries.items() if k in keep})
    if mode == "drop":
        return FiniteVector({k: v for k, v in x.entries.items() if k not in keep})
    raise ValueError(f"mode must be 'keep' or 'drop', got {mode!r}")


def excess(A: Sequence, B: Sequence, norm: Callable) -> float:
    """``max_{a in A} min_{b in B} norm(a - b)``.

    Elements only need to support subtraction; ``norm`` returns a float.
    """
    A, B = list(A), list(B)
    if not A or not B:
        raise ValueError("excess needs two nonempty sets")
    return max(min(float(norm(a - b)) for b in B) for a in A)


@dataclass(frozen=True)
class TruncationPair:
    """Finite coordinate sets ``C`` (rows / codomain) and ``D`` (columns / domain)."""

    C: frozenset = frozenset()
    D: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "C", frozenset(self.C))
        object.__setattr__(self, "D", frozenset(self.D))

    @property
    def rows(self) -> tuple:
        return sorted_labels(self.C)

    @property
    def cols(self) -> tuple:
        return sorted_labels(self.D)

    def as_dict(self) -> dict:
        return {"C": list(self.rows), "D": list(self.cols)}


@dataclass(frozen=True)
class VectorFamily:
    members: tuple
    ambient: Ambient

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a family needs at least one member")
        object.__setattr__(self, "members", members)

    @property
    def support(self) -> tuple:
        return sorted_labels(k for x in self.members for k in x.entries)

    def scale(self, factor: float) -> "VectorFamily":
        return VectorFamily(tuple(x.scale(factor) for x in self.members), self.ambient)

    def __len__(self):
        return len(self.members)
