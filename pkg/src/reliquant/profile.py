"""Operational profiles as weighted, possibly overlapping, strata over a domain.

A stratum restricts each field to a sub-range or subset of its values
(unrestricted fields keep their full range); its weight is its share of
operational demands. Within a stratum, inputs are uniform. Where strata
overlap, the mass of a point is the sum of its contributions.

Profile documents::

    profile nominal
    stratum w=3
      restrict temp 0..100
      restrict mode idle,run
    stratum w=1

Sampling draws, for demand ``i``, a stratum from the counter-based word
``(seed, stream 0, i)`` and then a uniform local index by rejection from the
words ``(seed, stream 1 + 64*attempt + limb, i)``; see :mod:`reliquant.rng`.
"""

from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass
from itertools import accumulate
from typing import Mapping, Sequence

import numpy as np

from . import rng
from ._text import is_identifier, tokenize_lines
from .domain import FieldKind, InputDomain, InputPoint
from .errors import ParseError, ValidationError

_MAX_LIMBS = 64


@dataclass(frozen=True)
class Stratum:
    weight: float
    restrictions: tuple[tuple[str, Sequence], ...] = ()

    def __post_init__(self):
        w = float(self.weight)
        if not (w > 0 and math.isfinite(w)):
            raise ValidationError(f"stratum weight must be positive, got {self.weight!r}")
        object.__setattr__(self, "weight", w)
        items = self.restrictions.items() if isinstance(self.restrictions, Mapping) else self.restrictions
        object.__setattr__(self, "restrictions", tuple((str(k), v) for k, v in items))

    @classmethod
    def of(cls, weight, **restrict):
        return cls(weight, tuple(restrict.items()))


@dataclass(frozen=True)
class OperationalProfile:
    name: str
    strata: tuple[Stratum, ...]

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        if not self.strata:
            raise ValidationError(f"profile {self.name!r} has no strata")

    @property
    def normalized_weights(self) -> tuple[float, ...]:
        total = math.fsum(s.weight for s in self.strata)
        return tuple(s.weight / total for s in self.strata)


def uniform_profile(name="uniform") -> OperationalProfile:
    return OperationalProfile(name, (Stratum(1.0),))


@dataclass(frozen=True)
class StratumReport:
    cardinality: int
    weight: float
    normalized_weight: float


@dataclass(frozen=True)
class ProfileReport:
    name: str
    strata: tuple[StratumReport, ...]


class _Resolved:
    """Profile strata mapped to per-field digit sequences of one domain."""

    def __init__(self, profile: OperationalProfile, domain: InputDomain):
        self.domain = domain
        self.weights = profile.normalized_weights
        self.digits = []  # per stratum, per field: range or sorted tuple of digits
        for k, stratum in enumerate(profile.strata):
            per_field = [range(f.size) for f in domain.fields]
            for name, allowed in stratum.restrictions:
                fi = domain.index_of_field(name)
                per_field[fi] = _restrict(domain.fields[fi], allowed, k)
            self.digits.append(per_field)
        self.sets = [[d if isinstance(d, range) else frozenset(d) for d in per] for per in self.digits]
        self.cards = [math.prod(len(d) for d in per) for per in self.digits]
        cum = list(accumulate(self.weights))
        cum[-1] = 1.0
        self.cumulative = cum

    def local_to_index(self, s, local):
        digits = self.digits[s]
        out = 0
        for fi in range(len(digits) - 1, -1, -1):
            local, d = divmod(local, len(digits[fi]))
            out += digits[fi][d] * self.domain.places[fi]
        return out


def _restrict(field, allowed, stratum_no):
    where = f"stratum {stratum_no + 1}, field {field.name!r}"
    if isinstance(allowed, range):
        if len(allowed) == 0:
            raise ValidationError(f"{where}: empty restriction")
        if field.kind is FieldKind.ENUM:
            raise ValidationError(f"{where}: ranges do not apply to enum fields")
        if allowed.step != 1 or allowed.start < field.lo or allowed[-1] > field.hi:
            raise ValidationError(f"{where}: range {allowed.start}..{allowed[-1]} outside [{field.lo}, {field.hi}]")
        return range(allowed.start - field.lo, allowed[-1] - field.lo + 1)
    values = list(allowed)
    if not values:
        raise ValidationError(f"{where}: empty restriction")
    digits = set()
    for v in values:
        if field.kind is FieldKind.ENUM:
            v = str(v)
        try:
            digits.add(field.digit(v))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return tuple(sorted(digits))


def validate_profile(profile: OperationalProfile, domain: InputDomain) -> ProfileReport:
    """Check every restriction against ``domain``; report stratum sizes and normalized weights."""
    res = _Resolved(profile, domain)
    return ProfileReport(profile.name, tuple(
        StratumReport(card, s.weight, w) for card, s, w in zip(res.cards, profile.strata, res.weights)
    ))


def profile_mass(profile: OperationalProfile, domain: InputDomain, point: InputPoint) -> float:
    """Probability the profile assigns to one input point."""
    domain.validate_point(point)
    res = _Resolved(profile, domain)
    digits = [f.digit(v) for f, v in zip(domain.fields, point)]
    return math.fsum(
        w / card
        for w, card, sets in zip(res.weights, res.cards, res.sets)
        if all(d in s for d, s in zip(digits, sets))
    )


def sample_indices(profile: OperationalProfile, domain: InputDomain, n: int, seed: int,
                   start: int = 0) -> list[int]:
    """Global indices of demands ``start .. start+n-1`` of the profile's sample stream."""
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if int(seed) != seed or not 0 <= seed <= rng.MASK64:
        raise ValidationError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    res = _Resolved(profile, domain)
    if domain.cardinality < 2**63:
        return _sample_vectorized(res, int(n), int(seed), int(start))
    return [_draw_one(res, int(seed), i) for i in range(start, start + n)]


def sample(profile: OperationalProfile, domain: InputDomain, n: int, seed: int) -> list[InputPoint]:
    """Draw ``n`` points with replacement; deterministic in ``seed``."""
    return [domain.index_to_point(i) for i in sample_indices(profile, domain, n, seed)]


def _uniform_local(seed, i, m):
    if m == 1:
        return 0
    bits = (m - 1).bit_length()
    limbs = -(-bits // 64)
    if limbs > _MAX_LIMBS:
        raise ValidationError(f"stratum cardinality needs more than {64 * _MAX_LIMBS} bits")
    mask = (1 << bits) - 1
    attempt = 0
    while True:
        x = 0
        for limb in range(limbs):
            x |= rng.word(rng.stream_key(seed, 1 + _MAX_LIMBS * attempt + limb), i) << (64 * limb)
        x &= mask
        if x < m:
            return x
        attempt += 1


def _draw_one(res: _Resolved, seed, i):
    u = rng.unit_float(rng.word(rng.stream_key(seed, 0), i))
    s = min(bisect.bisect_right(res.cumulative, u), len(res.cards) - 1)
    return res.local_to_index(s, _uniform_local(seed, i, res.cards[s]))


def _sample_vectorized(res: _Resolved, n, seed, start):
    counters = np.arange(start, start + n, dtype=np.uint64)
    u = rng.unit_floats(rng.words(rng.stream_key(seed, 0), counters))
    strata = np.minimum(np.searchsorted(np.asarray(res.cumulative), u, side="right"), len(res.cards) - 1)
    out = np.zeros(n, dtype=np.int64)
    places = res.domain.places
    for s, m in enumerate(res.cards):
        sel = np.nonzero(strata == s)[0]
        if sel.size == 0:
            continue
        local = np.zeros(sel.size, dtype=np.uint64)
        if m > 1:
            bits = (m - 1).bit_length()
            mask = np.uint64((1 << bits) - 1)
            todo = np.arange(sel.size)
            attempt = 0
            while todo.size:
                key = rng.stream_key(seed, 1 + _MAX_LIMBS * attempt)
                x = rng.words(key, counters[sel[todo]]) & mask
                ok = x < np.uint64(m)
                local[todo[ok]] = x[ok]
                todo = todo[~ok]
                attempt += 1
        local = local.astype(np.int64)
        index = np.zeros(sel.size, dtype=np.int64)
        for fi in range(len(places) - 1, -1, -1):
            allowed = res.digits[s][fi]
            local, d = np.divmod(local, len(allowed))
            if isinstance(allowed, range):
                digit = allowed.start + d
            else:
                digit = np.asarray(allowed, dtype=np.int64)[d]
            index += digit * places[fi]
        out[sel] = index
    return out.tolist()


# -- documents ---------------------------------------------------------------

_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")
_INT = re.compile(r"^-?\d+$")


def _parse_values(tokens, lineno, source):
    text = ",".join(tokens)
    m = _RANGE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise ParseError(f"empty range {text}", lineno, tokens[0].column, source)
        return range(lo, hi + 1)
    items = [t for t in text.split(",") if t]
    if not items:
        raise ParseError("empty restriction", lineno, tokens[0].column, source)
    return tuple(int(t) if _INT.match(t) else t for t in items)


def parse_profiles(text: str, source=None) -> dict[str, OperationalProfile]:
    """Parse one or more named profiles; returns them keyed by name in file order."""
    profiles: dict[str, OperationalProfile] = {}
    name = None
    strata: list[tuple[float, dict]] = []

    def close():
        if name is not None:
            if not strata:
                raise ParseError(f"profile {name!r} has no strata", None, None, source)
            profiles[name] = OperationalProfile(name, tuple(Stratum(w, tuple(r.items())) for w, r in strata))

    for lineno, _indent, toks in tokenize_lines(text, source):
        kw = toks[0]
        if kw == "profile":
            if len(toks) != 2 or not is_identifier(toks[1]):
                raise ParseError("expected: profile <name>", lineno, kw.column, source)
            close()
            if toks[1] in profiles:
                raise ParseError(f"duplicate profile {toks[1]!r}", lineno, toks[1].column, source)
            name, strata = str(toks[1]), []
        elif kw == "stratum":
            if name is None:
                raise ParseError("stratum before any 'profile' header", lineno, kw.column, source)
            if len(toks) != 2 or not toks[1].startswith("w="):
                raise ParseError("expected: stratum w=<weight>", lineno, kw.column, source)
            try:
                w = float(toks[1][2:])
            except ValueError:
                raise ParseError(f"bad weight {toks[1][2:]!r}", lineno, toks[1].column, source) from None
            if not (w > 0 and math.isfinite(w)):
                raise ParseError(f"nonpositive weight {toks[1][2:]}", lineno, toks[1].column, source)
            strata.append((w, {}))
        elif kw == "restrict":
            if not strata:
                raise ParseError("restrict outside a stratum", lineno, kw.column, source)
            if len(toks) < 3:
                raise ParseError("expected: restrict <field> <lo>..<hi> | <v1,v2,...>", lineno, kw.column, source)
            fname = str(toks[1])
            if fname in strata[-1][1]:
                raise ParseError(f"field {fname!r} restricted twice", lineno, toks[1].column, source)
            strata[-1][1][fname] = _parse_values(toks[2:], lineno, source)
        else:
            raise ParseError(f"unknown statement {kw!r}", lineno, kw.column, source)
    close()
    if not profiles:
        raise ParseError("no profiles declared", None, None, source)
    return profiles


def format_profile(profile: OperationalProfile) -> str:
    lines = [f"profile {profile.name}"]
    for s in profile.strata:
        lines.append(f"stratum w={s.weight!r}")
        for fname, allowed in s.restrictions:
            if isinstance(allowed, range) and allowed.step == 1 and len(allowed):
                lines.append(f"  restrict {fname} {allowed.start}..{allowed[-1]}")
            else:
                lines.append(f"  restrict {fname} " + ",".join(str(v) for v in allowed))
    return "\n".join(lines) + "\n"
