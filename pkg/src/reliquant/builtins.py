"""Named built-in subjects, reference functions, predicates and contracts.

The ``monitor`` subject is a make-safe monitor over a domain shaped like
three integers followed by three flags ``(a, b, c, f0, f1, f2)``. It requests
make-safe (output ``1``) when any trip condition holds:

* ``a >= 24``
* ``b >= 20`` while ``f0`` is set
* ``c >= 6`` while both ``f1`` and ``f2`` are set

``monitor_mutant`` is the same monitor with an off-by-one first threshold
(``a > 24``); it exists so tests can check that campaigns detect it.

Names resolve at call time, so campaign workers in other processes only need
the name.
"""

from .errors import ValidationError

A_TRIP = 24
B_TRIP = 20
C_TRIP = 6


def make_safe_required(point) -> bool:
    a, b, c, f0, f1, f2 = point[:6]
    return a >= A_TRIP or (f0 == 1 and b >= B_TRIP) or (f1 == 1 and f2 == 1 and c >= C_TRIP)


def monitor(point):
    a, b, c, f0, f1, f2 = point[:6]
    trips = 0
    if a - A_TRIP >= 0:
        trips += 1
    if f0 and b - B_TRIP >= 0:
        trips += 1
    if f1 and f2 and c - C_TRIP >= 0:
        trips += 1
    return ("1" if trips else "0",)


def monitor_mutant(point):
    a, b, c, f0, f1, f2 = point[:6]
    trips = 0
    if a - A_TRIP > 0:
        trips += 1
    if f0 and b - B_TRIP >= 0:
        trips += 1
    if f1 and f2 and c - C_TRIP >= 0:
        trips += 1
    return ("1" if trips else "0",)


def null_subject(point):
    return ()


def expected_monitor(point):
    return ("1" if make_safe_required(point) else "0",)


def always(point) -> bool:
    return True


def never(point) -> bool:
    return False


def _true(*args) -> bool:
    return True


def _single_flag_output(point, outputs) -> bool:
    return len(outputs) == 1 and outputs[0] in ("0", "1")


SUBJECTS = {
    "monitor": monitor,
    "monitor_mutant": monitor_mutant,
    "null": null_subject,
}

REFERENCES = {
    "monitor": expected_monitor,
}

PREDICATES = {
    "make_safe_required": make_safe_required,
    "always": always,
    "never": never,
}

# name -> (precondition(point), postcondition(point, outputs))
CONTRACTS = {
    "any": (_true, _true),
    "flag_output": (_true, _single_flag_output),
}


def lookup(table, kind, name):
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table))
        raise ValidationError(f"unknown built-in {kind} {name!r} (known: {known})") from None
