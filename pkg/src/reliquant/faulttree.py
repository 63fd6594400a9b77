"""Coherent AND/OR fault trees: parsing, minimal cut sets, quantification, importance.

Basic events are assumed statistically independent. Only AND and OR gates
exist, so every tree is coherent and the top-event probability is monotone
in each basic-event probability.

Tree documents are line oriented::

    # Example tree
    event A p=1e-31 "software"
    event B p=1e-2
    event C p=1e-5
    gate g1 and A B
    gate top_or or g1 C
    top top_or
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping

from ._text import is_identifier, quote, tokenize_lines, unquote
from .errors import (
    CutSetExplosionError,
    ParseError,
    TermLimitError,
    UndefinedImportanceError,
    ValidationError,
)

DEFAULT_CUT_SET_CAP = 10**6
DEFAULT_TERM_CAP = 2**20

CutSet = tuple  # sorted tuple of basic-event ids


class GateKind(str, Enum):
    AND = "and"
    OR = "or"


class Method(str, Enum):
    EXACT = "exact"
    RARE_EVENT = "rare_event"


@dataclass(frozen=True)
class BasicEvent:
    id: str
    probability: float
    label: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not is_identifier(self.id):
            raise ValidationError(f"invalid event id {self.id!r}")
        p = float(self.probability)
        if not 0.0 <= p <= 1.0:  # also rejects NaN
            raise ValidationError(f"probability of {self.id!r} out of [0,1]: {self.probability!r}")
        object.__setattr__(self, "probability", p)


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    children: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.id, str) or not is_identifier(self.id):
            raise ValidationError(f"invalid gate id {self.id!r}")
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValidationError(f"gate {self.id!r} needs at least 2 children")


@dataclass(frozen=True)
class FaultTree:
    """Validated, immutable fault tree.

    Construction checks id uniqueness, child resolution, acyclicity and that
    every node is reachable from ``top``.
    """

    events: tuple[BasicEvent, ...]
    gates: tuple[Gate, ...]
    top: str

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.id)))
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = set()
        for node in (*self.events, *self.gates):
            if node.id in seen:
                raise ValidationError(f"duplicate id {node.id!r}")
            seen.add(node.id)
        for gate in self.gates:
            for child in gate.children:
                if child not in seen:
                    raise ValidationError(f"gate {gate.id!r}: unknown child reference {child!r}")
        if self.top not in seen:
            raise ValidationError(f"top {self.top!r} does not resolve to a node")
        cycle = _find_cycle(self._gate_map)
        if cycle:
            raise ValidationError("cycle detected: " + " -> ".join(cycle))
        unreachable = seen - self._reachable()
        if unreachable:
            raise ValidationError("nodes unreachable from top: " + ", ".join(sorted(unreachable)))
        object.__setattr__(self, "gates", tuple(self._gate_map[g] for g in self._gate_order()))

    def _gate_order(self):
        """Canonical gate order: children before parents, depth-first from ``top``."""
        order, done = [], set()

        def visit(node):
            gate = self._gate_map.get(node)
            if gate is None or node in done:
                return
            done.add(node)
            for c in gate.children:
                visit(c)
            order.append(node)

        visit(self.top)
        return order

    @classmethod
    def from_dicts(cls, top, events: Mapping[str, float], gates: Mapping[str, tuple] = None):
        """Build from ``{id: p}`` and ``{id: (kind, [children...])}``."""
        evs = [BasicEvent(k, v) for k, v in events.items()]
        gs = [Gate(k, GateKind(kind), tuple(ch)) for k, (kind, ch) in (gates or {}).items()]
        return cls(tuple(evs), tuple(gs), top)

    @cached_property
    def _gate_map(self):
        return {g.id: g for g in self.gates}

    @cached_property
    def _event_map(self):
        return {e.id: e for e in self.events}

    @cached_property
    def _event_index(self):
        return {e.id: i for i, e in enumerate(self.events)}

    def _reachable(self):
        out, stack = set(), [self.top]
        while stack:
            node = stack.pop()
            if node in out:
                continue
            out.add(node)
            gate = self._gate_map.get(node)
            if gate:
                stack.extend(gate.children)
        return out

    @property
    def event_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.events)

    def event(self, event_id) -> BasicEvent:
        try:
            return self._event_map[event_id]
        except KeyError:
            raise ValidationError(f"unknown event id {event_id!r}") from None

    def probabilities(self) -> dict[str, float]:
        return {e.id: e.probability for e in self.events}

    def with_probabilities(self, updates: Mapping[str, float]) -> FaultTree:
        for k in updates:
            self.event(k)
        events = tuple(
            replace(e, probability=updates[e.id]) if e.id in updates else e for e in self.events
        )
        return FaultTree(events, self.gates, self.top)

    def evaluate(self, failed: Iterable[str]) -> bool:
        """Structure function: does the top event occur when ``failed`` events occur?"""
        failed = set(failed)
        memo = {}

        def visit(node):
            if node in memo:
                return memo[node]
            gate = self._gate_map.get(node)
            if gate is None:
                val = node in failed
            elif gate.kind is GateKind.AND:
                val = all(visit(c) for c in gate.children)
            else:
                val = any(visit(c) for c in gate.children)
            memo[node] = val
            return val

        return visit(self.top)

    @cached_property
    def _cut_masks(self):
        return _cut_set_masks(self, DEFAULT_CUT_SET_CAP)


def _find_cycle(gates: Mapping[str, Gate]):
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(gates, WHITE)
    for root in sorted(gates):
        if colour[root] != WHITE:
            continue
        path = [root]
        iters = [iter(gates[root].children)]
        colour[root] = GREY
        while iters:
            child = next(iters[-1], None)
            if child is None:
                colour[path.pop()] = BLACK
                iters.pop()
                continue
            if child not in gates:
                continue
            if colour[child] == GREY:
                return path[path.index(child):] + [child]
            if colour[child] == WHITE:
                colour[child] = GREY
                path.append(child)
                iters.append(iter(gates[child].children))
    return None


# -- parsing / serialization -------------------------------------------------

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_fault_tree(text: str, source=None) -> FaultTree:
    """Parse a tree document; errors carry the offending line and column."""
    events: dict[str, BasicEvent] = {}
    gates: dict[str, Gate] = {}
    where: dict[str, tuple[int, int]] = {}
    child_pos: dict[tuple[str, int], tuple[int, int]] = {}
    top = None

    def declare(tok, lineno):
        if not is_identifier(tok):
            raise ParseError(f"invalid identifier {tok!r}", lineno, tok.column, source)
        if tok in where:
            raise ParseError(f"duplicate id {tok!r} (first declared on line {where[tok][0]})",
                             lineno, tok.column, source)
        where[str(tok)] = (lineno, tok.column)

    for lineno, _indent, toks in tokenize_lines(text, source):
        kw = toks[0]
        if kw == "event":
            if len(toks) not in (3, 4):
                raise ParseError('expected: event <id> p=<number> ["label"]', lineno, kw.column, source)
            declare(toks[1], lineno)
            ptok = toks[2]
            if not ptok.startswith("p=") or not _NUMBER.match(ptok[2:]):
                raise ParseError(f"expected p=<number>, got {ptok!r}", lineno, ptok.column, source)
            p = float(ptok[2:])
            if not 0.0 <= p <= 1.0:
                raise ParseError(f"probability out of [0,1]: {ptok[2:]}", lineno, ptok.column + 2, source)
            label = None
            if len(toks) == 4:
                if not toks[3].startswith('"'):
                    raise ParseError("label must be a double-quoted string", lineno, toks[3].column, source)
                label = unquote(toks[3])
            events[str(toks[1])] = BasicEvent(str(toks[1]), p, label)
        elif kw == "gate":
            if len(toks) < 3:
                raise ParseError("expected: gate <id> <and|or> <child> <child> ...", lineno, kw.column, source)
            declare(toks[1], lineno)
            kind = toks[2].lower()
            if kind not in ("and", "or"):
                raise ParseError(f"unknown gate kind {toks[2]!r}", lineno, toks[2].column, source)
            children = toks[3:]
            if len(children) < 2:
                raise ParseError(f"gate {toks[1]!r} needs at least 2 children", lineno, kw.column, source)
            for i, c in enumerate(children):
                child_pos[(str(toks[1]), i)] = (lineno, c.column)
            gates[str(toks[1])] = Gate(str(toks[1]), GateKind(kind), tuple(str(c) for c in children))
        elif kw == "top":
            if len(toks) != 2:
                raise ParseError("expected: top <id>", lineno, kw.column, source)
            if top is not None:
                raise ParseError("top declared more than once", lineno, kw.column, source)
            top = (str(toks[1]), lineno, toks[1].column)
        else:
            raise ParseError(f"unknown statement {kw!r}", lineno, kw.column, source)

    if top is None:
        raise ParseError("missing 'top' statement", None, None, source)
    for gate in gates.values():
        for i, c in enumerate(gate.children):
            if c not in where:
                ln, col = child_pos[(gate.id, i)]
                raise ParseError(f"unknown child reference {c!r}", ln, col, source)
    if top[0] not in where:
        raise ParseError(f"unknown top reference {top[0]!r}", top[1], top[2], source)
    cycle = _find_cycle(gates)
    if cycle:
        ln, col = where[cycle[0]]
        raise ParseError("cycle detected: " + " -> ".join(cycle), ln, col, source)
    try:
        return FaultTree(tuple(events.values()), tuple(gates.values()), top[0])
    except ValidationError as exc:
        raise ParseError(str(exc), None, None, source) from exc


def format_event(event: BasicEvent) -> str:
    """One ``event`` line, suitable for pasting into a tree document."""
    line = f"event {event.id} p={event.probability!r}"
    if event.label is not None:
        line += " " + quote(event.label)
    return line


def format_fault_tree(tree: FaultTree) -> str:
    """Canonical text: events sorted by id, gates children-first, then ``top``."""
    lines = [format_event(e) for e in tree.events]
    lines += [f"gate {g.id} {g.kind.value} " + " ".join(g.children) for g in tree.gates]
    lines.append(f"top {tree.top}")
    return "\n".join(lines) + "\n"


# -- cut sets ----------------------------------------------------------------

def _minimize(masks):
    kept = []
    for m in sorted(set(masks), key=lambda m: (m.bit_count(), m)):
        if not any(k & m == k for k in kept):
            kept.append(m)
    return kept


def _cut_set_masks(tree: FaultTree, cap):
    index = tree._event_index
    memo = {}

    def expand(node):
        if node in memo:
            return memo[node]
        gate = tree._gate_map.get(node)
        if gate is None:
            result = [1 << index[node]]
        elif gate.kind is GateKind.OR:
            pool = []
            for c in gate.children:
                pool.extend(expand(c))
                if len(pool) > cap:
                    raise CutSetExplosionError(f"more than {cap} intermediate cut sets at gate {gate.id!r}")
            result = _minimize(pool)
        else:
            result = [0]
            for c in gate.children:
                sub = expand(c)
                if len(result) * len(sub) > cap:
                    raise CutSetExplosionError(f"more than {cap} intermediate cut sets at gate {gate.id!r}")
                result = _minimize([a | b for a in result for b in sub])
        memo[node] = result
        return result

    return tuple(expand(tree.top))


def _mask_ids(tree, mask):
    return tuple(e.id for i, e in enumerate(tree.events) if mask >> i & 1)


def minimal_cut_sets(tree: FaultTree, cap: int = DEFAULT_CUT_SET_CAP) -> tuple[CutSet, ...]:
    """All minimal cut sets, each a sorted id tuple, the collection sorted lexicographically."""
    masks = tree._cut_masks if cap == DEFAULT_CUT_SET_CAP else _cut_set_masks(tree, cap)
    return tuple(sorted(_mask_ids(tree, m) for m in masks))


# -- quantification ----------------------------------------------------------

def _mask_product(mask, probs):
    out = 1.0
    i = 0
    while mask:
        if mask & 1:
            out *= probs[i]
        mask >>= 1
        i += 1
    return out


def _ie_terms(masks, term_cap):
    """Signed inclusion-exclusion terms keyed by event-union mask.

    Like terms are collected, so coefficients stay exact integers and the
    term count is bounded by the number of distinct unions.
    """
    terms: dict[int, int] = {}
    for c in masks:
        update = {c: 1}
        for u, coef in terms.items():
            v = u | c
            update[v] = update.get(v, 0) - coef
        for v, coef in update.items():
            total = terms.get(v, 0) + coef
            if total:
                terms[v] = total
            else:
                terms.pop(v, None)
        if len(terms) > term_cap:
            raise TermLimitError(
                f"inclusion-exclusion needs more than {term_cap} terms; use the rare-event method"
            )
    return terms


def _terms(tree, term_cap):
    if term_cap == DEFAULT_TERM_CAP:
        if "_ie_cache" not in tree.__dict__:
            tree.__dict__["_ie_cache"] = _ie_terms(tree._cut_masks, term_cap)
        return tree.__dict__["_ie_cache"]
    return _ie_terms(tree._cut_masks, term_cap)


def _probs(tree, overrides=None):
    probs = [e.probability for e in tree.events]
    if overrides:
        for k, v in overrides.items():
            probs[tree._event_index[k]] = v
    return probs


def _top(tree, method, probs, term_cap):
    if Method(method) is Method.EXACT:
        terms = _terms(tree, term_cap)
        value = math.fsum(coef * _mask_product(m, probs) for m, coef in terms.items())
        return min(1.0, max(0.0, value))
    return min(1.0, math.fsum(_mask_product(m, probs) for m in tree._cut_masks))


def top_event_probability(tree: FaultTree, method: Method | str = Method.EXACT,
                          term_cap: int = DEFAULT_TERM_CAP) -> float:
    """Top-event probability from the minimal cut sets.

    ``EXACT`` is inclusion-exclusion (fsum-accumulated); ``RARE_EVENT`` is the
    sum of cut-set probabilities clamped to 1, an upper bound for coherent trees.
    """
    return _top(tree, method, _probs(tree), term_cap)


def birnbaum_importance(tree: FaultTree, event: str, term_cap: int = DEFAULT_TERM_CAP) -> float:
    """P(top | event occurs) - P(top | event does not occur), exact method.

    Terms without the event cancel between the two conditionals, so only the
    terms containing it are summed; this keeps tiny differences exact.
    """
    tree.event(event)
    bit = 1 << tree._event_index[event]
    probs = _probs(tree, {event: 1.0})
    terms = _terms(tree, term_cap)
    return math.fsum(coef * _mask_product(m, probs) for m, coef in terms.items() if m & bit)


def fussell_vesely_importance(tree: FaultTree, event: str) -> float:
    """Share of the rare-event sum contributed by cut sets containing ``event``."""
    tree.event(event)
    bit = 1 << tree._event_index[event]
    probs = _probs(tree)
    prods = [(m, _mask_product(m, probs)) for m in tree._cut_masks]
    total = math.fsum(p for _, p in prods)
    if total == 0.0:
        raise UndefinedImportanceError("top-event probability is zero; importance undefined")
    return min(1.0, math.fsum(p for m, p in prods if m & bit) / total)


@dataclass(frozen=True)
class ImportanceEntry:
    event: str
    birnbaum: float
    fussell_vesely: float


@dataclass(frozen=True)
class ImportanceReport:
    entries: tuple[ImportanceEntry, ...]
    ranking: tuple[str, ...] = field(default=())

    def entry(self, event_id) -> ImportanceEntry:
        for e in self.entries:
            if e.event == event_id:
                return e
        raise KeyError(event_id)


def improvement_ranking(tree: FaultTree) -> ImportanceReport:
    """Rank events by Fussell-Vesely importance, descending; ties by id."""
    entries = tuple(
        ImportanceEntry(eid, birnbaum_importance(tree, eid), fussell_vesely_importance(tree, eid))
        for eid in tree.event_ids
    )
    ranking = tuple(e.event for e in sorted(entries, key=lambda e: (-e.fussell_vesely, e.event)))
    return ImportanceReport(entries, ranking)


__all__ = [
    "BasicEvent", "Gate", "GateKind", "FaultTree", "Method", "CutSet",
    "ImportanceEntry", "ImportanceReport", "parse_fault_tree", "format_fault_tree", "format_event",
    "minimal_cut_sets", "top_event_probability", "birnbaum_importance",
    "fussell_vesely_importance", "improvement_ranking",
    "DEFAULT_CUT_SET_CAP", "DEFAULT_TERM_CAP",
]
