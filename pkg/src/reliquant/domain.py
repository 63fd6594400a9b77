"""Finite cartesian input domains with mixed-radix global indexing.

The global index of a point is its mixed-radix number with the *last*
declared field varying fastest, so index 0 is every field at its first value.

Domain documents::

    field temp int 0 127
    field override flag
    field mode enum idle run halt
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Iterator, Sequence

from ._text import is_identifier, tokenize_lines
from .errors import ParseError, PredicateError, ValidationError

InputPoint = tuple  # one value per field, in declaration order


class FieldKind(str, Enum):
    INT = "int"
    FLAG = "flag"
    ENUM = "enum"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: FieldKind
    lo: int = 0
    hi: int = 1
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not is_identifier(self.name):
            raise ValidationError(f"invalid field name {self.name!r}")
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if self.kind is FieldKind.INT:
            if int(self.lo) != self.lo or int(self.hi) != self.hi:
                raise ValidationError(f"field {self.name!r}: bounds must be integers")
            if self.lo > self.hi:
                raise ValidationError(f"field {self.name!r}: lo > hi ({self.lo} > {self.hi})")
        elif self.kind is FieldKind.FLAG:
            object.__setattr__(self, "lo", 0)
            object.__setattr__(self, "hi", 1)
        else:
            labels = tuple(self.labels)
            if not labels:
                raise ValidationError(f"field {self.name!r}: enum needs at least one label")
            if len(set(labels)) != len(labels):
                raise ValidationError(f"field {self.name!r}: duplicate enum labels")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def int_range(cls, name, lo, hi):
        return cls(name, FieldKind.INT, lo, hi)

    @classmethod
    def flag(cls, name):
        return cls(name, FieldKind.FLAG)

    @classmethod
    def enum(cls, name, labels):
        return cls(name, FieldKind.ENUM, labels=tuple(labels))

    @cached_property
    def values(self) -> Sequence:
        if self.kind is FieldKind.ENUM:
            return self.labels
        return range(self.lo, self.hi + 1)

    @property
    def size(self) -> int:
        return len(self.values)

    @cached_property
    def _label_digit(self):
        return {label: i for i, label in enumerate(self.labels)}

    def digit(self, value) -> int:
        """Position of ``value`` within this field's ordered values."""
        if self.kind is FieldKind.ENUM:
            try:
                return self._label_digit[value]
            except (KeyError, TypeError):
                raise ValidationError(f"field {self.name!r}: unknown label {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, int) or not self.lo <= value <= self.hi:
            raise ValidationError(f"field {self.name!r}: value {value!r} outside [{self.lo}, {self.hi}]")
        return value - self.lo

    def describe(self) -> str:
        if self.kind is FieldKind.INT:
            return f"field {self.name} int {self.lo} {self.hi}"
        if self.kind is FieldKind.FLAG:
            return f"field {self.name} flag"
        return f"field {self.name} enum " + " ".join(self.labels)


@dataclass(frozen=True)
class IndexRange:
    start: int
    end: int

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class InputDomain:
    fields: tuple[FieldSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if not self.fields:
            raise ValidationError("a domain needs at least one field")
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValidationError("field names must be unique")

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.fields)

    @cached_property
    def places(self) -> tuple[int, ...]:
        """Weight of one step in each field's digit."""
        out, acc = [], 1
        for size in reversed(self.sizes):
            out.append(acc)
            acc *= size
        return tuple(reversed(out))

    @cached_property
    def cardinality(self) -> int:
        acc = 1
        for size in self.sizes:
            acc *= size
        return acc

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def field(self, name) -> FieldSpec:
        for f in self.fields:
            if f.name == name:
                return f
        raise ValidationError(f"unknown field {name!r}")

    def index_of_field(self, name) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown field {name!r}") from None

    def digits_to_index(self, digits) -> int:
        return sum(d * w for d, w in zip(digits, self.places))

    def index_to_digits(self, index) -> list[int]:
        if isinstance(index, bool) or int(index) != index or not 0 <= index < self.cardinality:
            raise ValidationError(f"index {index!r} out of range [0, {self.cardinality})")
        index = int(index)
        digits = []
        for size in reversed(self.sizes):
            index, d = divmod(index, size)
            digits.append(d)
        return digits[::-1]

    def index_to_point(self, index) -> InputPoint:
        digits = self.index_to_digits(index)
        return tuple(f.values[d] for f, d in zip(self.fields, digits))

    def point_to_index(self, point) -> int:
        self.validate_point(point)
        return self.digits_to_index(f.digit(v) for f, v in zip(self.fields, point))

    def validate_point(self, point):
        if len(point) != len(self.fields):
            raise ValidationError(f"point arity {len(point)} != domain arity {len(self.fields)}")
        for f, v in zip(self.fields, point):
            f.digit(v)

    def to_text(self) -> str:
        return "\n".join(f.describe() for f in self.fields) + "\n"

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def cardinality(domain: InputDomain) -> int:
    return domain.cardinality


def index_to_point(domain: InputDomain, index: int) -> InputPoint:
    return domain.index_to_point(index)


def point_to_index(domain: InputDomain, point) -> int:
    return domain.point_to_index(point)


def partition(domain: InputDomain, parts: int) -> list[IndexRange]:
    """Split ``[0, cardinality)`` into ``parts`` contiguous ranges whose sizes differ by at most one."""
    if int(parts) != parts or parts < 1:
        raise ValidationError(f"parts must be a positive integer, got {parts!r}")
    q, r = divmod(domain.cardinality, parts)
    out, start = [], 0
    for k in range(parts):
        end = start + q + (1 if k < r else 0)
        out.append(IndexRange(start, end))
        start = end
    return out


def iter_indexed(domain: InputDomain, start: int = 0, end: int | None = None) -> Iterator[tuple[int, InputPoint]]:
    """Stream ``(index, point)`` for ``start <= index < end`` in index order, in constant memory."""
    card = domain.cardinality
    end = card if end is None else end
    if not 0 <= start <= end <= card:
        raise ValidationError(f"range [{start}, {end}) not within [0, {card})")
    if start == end:
        return
    values = [f.values for f in domain.fields]
    sizes = domain.sizes
    digits = domain.index_to_digits(start)
    last = values[-1]
    n_last = sizes[-1]
    index = start
    while index < end:
        prefix = tuple(values[k][digits[k]] for k in range(len(values) - 1))
        stop = min(n_last, digits[-1] + (end - index))
        for d in range(digits[-1], stop):
            yield index, prefix + (last[d],)
            index += 1
        digits[-1] = 0
        k = len(digits) - 2
        while k >= 0:
            digits[k] += 1
            if digits[k] < sizes[k]:
                break
            digits[k] = 0
            k -= 1


def enumerate_points(domain: InputDomain, start: int = 0, end: int | None = None) -> Iterator[InputPoint]:
    for _, point in iter_indexed(domain, start, end):
        yield point


def enumerate_filtered(domain: InputDomain, predicate: Callable[[InputPoint], bool],
                       start: int = 0, end: int | None = None) -> Iterator[InputPoint]:
    """Yield the points satisfying ``predicate`` in ascending index order."""
    for index, point in iter_indexed(domain, start, end):
        try:
            keep = predicate(point)
        except Exception as exc:
            raise PredicateError(f"predicate failed at index {index}: {exc!r}") from exc
        if keep:
            yield point


def parse_domain(text: str, source=None) -> InputDomain:
    fields = []
    seen = {}
    for lineno, _indent, toks in tokenize_lines(text, source):
        if toks[0] != "field":
            raise ParseError(f"unknown statement {toks[0]!r}", lineno, toks[0].column, source)
        if len(toks) < 3:
            raise ParseError("expected: field <name> <int|flag|enum> ...", lineno, toks[0].column, source)
        name, kind = toks[1], toks[2]
        if name in seen:
            raise ParseError(f"duplicate field {name!r} (first on line {seen[name]})", lineno, name.column, source)
        seen[str(name)] = lineno
        try:
            if kind == "int":
                if len(toks) != 5:
                    raise ParseError("expected: field <name> int <lo> <hi>", lineno, kind.column, source)
                try:
                    lo, hi = int(toks[3]), int(toks[4])
                except ValueError:
                    raise ParseError("int bounds must be decimal integers", lineno, toks[3].column, source) from None
                fields.append(FieldSpec.int_range(str(name), lo, hi))
            elif kind == "flag":
                if len(toks) != 3:
                    raise ParseError("expected: field <name> flag", lineno, kind.column, source)
                fields.append(FieldSpec.flag(str(name)))
            elif kind == "enum":
                fields.append(FieldSpec.enum(str(name), [str(t) for t in toks[3:]]))
            else:
                raise ParseError(f"unknown field kind {kind!r}", lineno, kind.column, source)
        except ParseError:
            raise
        except ValidationError as exc:
            raise ParseError(str(exc), lineno, name.column, source) from exc
    if not fields:
        raise ParseError("domain declares no fields", None, None, source)
    return InputDomain(tuple(fields))


def format_domain(domain: InputDomain) -> str:
    return domain.to_text()
