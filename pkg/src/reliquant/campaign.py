"""Exhaustive, partial-exhaustive and statistical test campaigns.

A campaign pushes input points through a subject under test and asks an
oracle for a verdict on each output. Work is split into independent blocks
(contiguous index ranges, or contiguous runs of sample draws); blocks run in
worker processes that share nothing mutable, and one aggregator merges their
reports. Results other than timing do not depend on the worker count.

Subprocess subjects speak a line protocol: one request line per case with the
field values tab-separated (flags as ``0``/``1``, enum labels verbatim), one
reply line with the outputs tab-separated. A reply starting with ``!`` is a
subject-side error for that case.
"""

from __future__ import annotations

import heapq
import math
import os
import shlex
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from . import builtins, rng
from .domain import InputDomain, iter_indexed, partition
from .errors import (
    CampaignRuntimeError,
    NoClaimError,
    PredicateError,
    ProtocolError,
    SubjectLaunchError,
    ValidationError,
)
from .faulttree import BasicEvent
from .profile import OperationalProfile, sample_indices, validate_profile
from .stats import Basis, DemonstratedClaim, demonstrated_pfd

DEFAULT_FAILURE_CAP = 1000
DEFAULT_CONFIDENCE = 0.99
_SAMPLE_CHUNK = 1 << 16


class Mode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    PARTIAL_EXHAUSTIVE = "partial_exhaustive"
    STATISTICAL = "statistical"


class FailureKind(str, Enum):
    MISMATCH = "MISMATCH"
    VIOLATION = "VIOLATION"
    SUBJECT_ERROR = "SUBJECT_ERROR"
    ORACLE_ERROR = "ORACLE_ERROR"


class SubjectCaseError(Exception):
    """The subject reported an error for one case (``!`` reply)."""


# -- subjects ----------------------------------------------------------------

class _SubprocessRunner:
    def __init__(self, command):
        try:
            self.proc = subprocess.Popen(
                list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1,
            )
        except OSError as exc:
            raise SubjectLaunchError(f"cannot launch subject {shlex.join(command)!r}: {exc}") from exc
        self.call = self.__call__

    def __call__(self, point):
        line = "\t".join(str(v) for v in point) + "\n"
        try:
            self.proc.stdin.write(line)
            self.proc.stdin.flush()
            reply = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"subject pipe closed: {exc}") from exc
        if not reply.endswith("\n"):
            code = self.proc.poll()
            raise ProtocolError(f"subject closed its output (exit status {code}) without replying")
        reply = reply.rstrip("\r\n")
        if reply.startswith("!"):
            raise SubjectCaseError(reply[1:].strip())
        return tuple(reply.split("\t")) if reply else ()

    def close(self):
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class _FunctionRunner:
    def __init__(self, func):
        self.func = func
        self.call = self.__call__

    def __call__(self, point):
        return tuple(str(v) for v in self.func(point))

    def close(self):
        pass


@dataclass(frozen=True)
class SubjectAdapter:
    """How to reach the subject under test.

    The subject must be a pure function of the input point. Each worker opens
    its own instance (one subprocess per worker for ``subprocess`` subjects).
    """

    kind: str  # "in_process" or "subprocess"
    name: str = ""
    command: tuple[str, ...] = ()
    func: Callable | None = None

    @classmethod
    def builtin(cls, name):
        builtins.lookup(builtins.SUBJECTS, "subject", name)
        return cls("in_process", name)

    @classmethod
    def function(cls, func, name=None):
        """Wrap a module-level callable (must be picklable for multi-worker runs)."""
        return cls("in_process", name or getattr(func, "__name__", "function"), func=func)

    @classmethod
    def subprocess(cls, command):
        if isinstance(command, str):
            command = shlex.split(command)
        if not command:
            raise ValidationError("empty subject command")
        return cls("subprocess", command=tuple(command))

    @property
    def id(self):
        if self.kind == "subprocess":
            return "cmd:" + shlex.join(self.command)
        return ("builtin:" if self.func is None else "func:") + self.name

    def open(self):
        if self.kind == "subprocess":
            return _SubprocessRunner(self.command)
        func = self.func or builtins.lookup(builtins.SUBJECTS, "subject", self.name)
        if func in builtins.SUBJECTS.values():
            # built-ins already return string tuples
            return _BareRunner(func)
        return _FunctionRunner(func)


class _BareRunner(_FunctionRunner):
    def __init__(self, func):
        super().__init__(func)
        self.call = func  # skips output normalization


def subject_from_string(text: str) -> SubjectAdapter:
    """``builtin:<name>`` or ``cmd:<command line>``."""
    kind, sep, rest = text.partition(":")
    if sep and kind == "builtin":
        return SubjectAdapter.builtin(rest)
    if sep and kind == "cmd":
        return SubjectAdapter.subprocess(rest)
    raise ValidationError(f"subject must be 'builtin:<name>' or 'cmd:<command>', got {text!r}")


# -- oracles -----------------------------------------------------------------

class OracleKind(str, Enum):
    EXPECTED_FUNCTION = "expected"
    PRE_POST = "prepost"
    MAKE_SAFE_FLAG = "make-safe"


@dataclass(frozen=True)
class Oracle:
    """Pass/fail judge for one ``(input, output)`` pair.

    * ``EXPECTED_FUNCTION``: outputs must equal a reference function's outputs.
    * ``PRE_POST``: whenever the precondition holds on the input, the
      postcondition must hold on ``(input, output)``.
    * ``MAKE_SAFE_FLAG``: whenever the predicate says make-safe is required,
      the first output must be ``1``. Outputs on other inputs are not judged.
    """

    kind: OracleKind
    name: str
    funcs: tuple = ()  # optional callables overriding the built-in lookup

    @classmethod
    def expected(cls, name_or_func):
        if callable(name_or_func):
            return cls(OracleKind.EXPECTED_FUNCTION, name_or_func.__name__, (name_or_func,))
        builtins.lookup(builtins.REFERENCES, "reference", name_or_func)
        return cls(OracleKind.EXPECTED_FUNCTION, name_or_func)

    @classmethod
    def pre_post(cls, name=None, pre=None, post=None):
        if pre is not None or post is not None:
            return cls(OracleKind.PRE_POST, name or "contract", (pre or builtins._true, post or builtins._true))
        builtins.lookup(builtins.CONTRACTS, "contract", name)
        return cls(OracleKind.PRE_POST, name)

    @classmethod
    def make_safe(cls, name_or_func="make_safe_required"):
        if callable(name_or_func):
            return cls(OracleKind.MAKE_SAFE_FLAG, name_or_func.__name__, (name_or_func,))
        builtins.lookup(builtins.PREDICATES, "predicate", name_or_func)
        return cls(OracleKind.MAKE_SAFE_FLAG, name_or_func)

    @property
    def id(self):
        return f"{self.kind.value}:{self.name}"

    def checker(self):
        """Return ``check(point, outputs) -> None | (FailureKind, expected_text)``."""
        if self.kind is OracleKind.EXPECTED_FUNCTION:
            ref = self.funcs[0] if self.funcs else builtins.REFERENCES[self.name]

            def check(point, outputs):
                want = tuple(str(v) for v in ref(point))
                if want != outputs:
                    return FailureKind.MISMATCH, "\t".join(want)
                return None
        elif self.kind is OracleKind.PRE_POST:
            pre, post = self.funcs if self.funcs else builtins.CONTRACTS[self.name]

            def check(point, outputs):
                if pre(point) and not post(point, outputs):
                    return FailureKind.VIOLATION, f"postcondition {self.name}"
                return None
        else:
            required = self.funcs[0] if self.funcs else builtins.PREDICATES[self.name]

            def check(point, outputs):
                if required(point) and (not outputs or outputs[0] != "1"):
                    return FailureKind.VIOLATION, "make-safe flag 1"
                return None
        return check


def oracle_from_string(text: str) -> Oracle:
    """``expected:<ref>``, ``prepost:<contract>`` or ``make-safe:<predicate>``."""
    kind, sep, rest = text.partition(":")
    if sep:
        if kind == "expected":
            return Oracle.expected(rest)
        if kind == "prepost":
            return Oracle.pre_post(rest)
        if kind in ("make-safe", "make_safe"):
            return Oracle.make_safe(rest)
    raise ValidationError(f"oracle must be expected:<ref>, prepost:<contract> or make-safe:<predicate>, got {text!r}")


def resolve_predicate(predicate):
    if callable(predicate):
        return predicate.__name__, predicate
    return predicate, builtins.lookup(builtins.PREDICATES, "predicate", predicate)


# -- specs and results -------------------------------------------------------

@dataclass(frozen=True)
class CampaignSpec:
    mode: Mode
    workers: int = 1
    failure_cap: int = DEFAULT_FAILURE_CAP
    n: int | None = None
    seed: int = 0
    profile: str | None = None
    predicate: str | None = None
    confidence: float = DEFAULT_CONFIDENCE

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValidationError("workers must be a positive integer")
        if int(self.failure_cap) != self.failure_cap or self.failure_cap < 1:
            raise ValidationError("failure_cap must be a positive integer")
        if not 0.0 < self.confidence < 1.0:
            raise ValidationError("confidence must lie in (0, 1)")
        if self.mode is Mode.STATISTICAL:
            if self.n is None or int(self.n) != self.n or self.n < 1:
                raise ValidationError("statistical mode needs n >= 1")
            if not self.profile:
                raise ValidationError("statistical mode needs a profile")
            if not 0 <= self.seed <= rng.MASK64:
                raise ValidationError("seed must be in [0, 2**64)")
        if self.mode is Mode.PARTIAL_EXHAUSTIVE and not self.predicate:
            raise ValidationError("partial_exhaustive mode needs a named predicate")


_SPEC_KEYS = {"mode", "workers", "confidence", "n", "seed", "profile", "predicate", "failure_cap"}


def parse_campaign_spec(text: str, defaults: dict | None = None) -> CampaignSpec:
    """Parse ``key=value`` lines (``#`` comments allowed)."""
    values = dict(defaults or {})
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in _SPEC_KEYS:
            raise ValidationError(f"line {lineno}: expected one of {sorted(_SPEC_KEYS)} as key=value, got {raw!r}")
        if key in seen:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            if key in ("workers", "n", "seed", "failure_cap"):
                values[key] = int(val, 0)
            elif key == "confidence":
                values[key] = float(val)
            elif key == "mode":
                values[key] = Mode(val.replace("-", "_"))
            else:
                values[key] = val
        except ValueError:
            raise ValidationError(f"line {lineno}: bad value for {key}: {val!r}") from None
    if "mode" not in values:
        raise ValidationError("campaign spec has no mode=")
    return CampaignSpec(**values)


def format_campaign_spec(spec: CampaignSpec) -> str:
    lines = [f"mode={spec.mode.value}", f"workers={spec.workers}", f"failure_cap={spec.failure_cap}",
             f"confidence={spec.confidence!r}"]
    if spec.mode is Mode.STATISTICAL:
        lines += [f"n={spec.n}", f"seed={spec.seed}", f"profile={spec.profile}"]
    if spec.predicate:
        lines.append(f"predicate={spec.predicate}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, order=True)
class Failure:
    index: int
    draw: int
    kind: str = field(compare=False)
    point: tuple = field(compare=False)
    observed: tuple | None = field(compare=False)
    expected: str = field(compare=False)


@dataclass(frozen=True)
class ExhaustiveCertificate:
    """Every point of the stated (sub)domain was executed without failure."""

    domain_digest: str
    domain_cardinality: int
    verified: int
    predicate: str | None = None


@dataclass
class CampaignResult:
    mode: Mode
    executed: int
    failure_count: int
    failures: list[Failure]
    elapsed: float
    workers: int
    claim: DemonstratedClaim | None = None
    certificate: ExhaustiveCertificate | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def throughput(self) -> float:
        return self.executed / self.elapsed if self.elapsed > 0 else math.inf

    @property
    def throughput_per_worker(self) -> float:
        return self.throughput / self.workers

    def deterministic_view(self) -> dict:
        """Everything except timing and the worker count."""
        return {
            "mode": self.mode, "executed": self.executed, "failure_count": self.failure_count,
            "failures": list(self.failures), "claim": self.claim, "certificate": self.certificate,
            "metadata": dict(self.metadata),
        }


# -- execution ---------------------------------------------------------------

def _keep_smallest(failures, cap):
    if len(failures) > 2 * cap:
        failures[:] = heapq.nsmallest(cap, failures)


def _run_block(task):
    """Worker entry point: run one block and report (executed, failure_count, failures)."""
    domain, subject, oracle, kind, payload, cap, predicate = task
    check = oracle.checker()
    pred = resolve_predicate(predicate)[1] if predicate is not None else None
    executed = 0
    count = 0
    failures: list[Failure] = []

    if kind == "range":
        start, end = payload
        cases = ((i, -1, p) for i, p in iter_indexed(domain, start, end))
    else:
        profile, seed, first, n = payload
        cases = _drawn_cases(domain, profile, seed, first, n)

    runner = subject.open()
    call = runner.call
    try:
        for index, draw, point in cases:
            if pred is not None:
                try:
                    if not pred(point):
                        continue
                except Exception as exc:
                    raise PredicateError(f"predicate failed at index {index}: {exc!r}") from exc
            executed += 1
            try:
                out = call(point)
            except SubjectCaseError as exc:
                verdict, out = (FailureKind.SUBJECT_ERROR, str(exc)), None
            else:
                try:
                    verdict = check(point, out)
                except Exception as exc:
                    verdict = (FailureKind.ORACLE_ERROR, repr(exc))
            if verdict is not None:
                count += 1
                failures.append(Failure(index, draw, verdict[0].value, point, out, verdict[1]))
                _keep_smallest(failures, cap)
    finally:
        runner.close()
    return executed, count, heapq.nsmallest(cap, failures)


def _drawn_cases(domain, profile, seed, first, n):
    done = 0
    while done < n:
        size = min(_SAMPLE_CHUNK, n - done)
        indices = sample_indices(profile, domain, size, seed, start=first + done)
        for k, index in enumerate(indices):
            yield index, first + done + k, domain.index_to_point(index)
        done += size


def _execute(tasks, workers):
    if workers == 1 or len(tasks) == 1:
        return [_run_block(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_block, tasks))


def _merge(reports, cap):
    executed = sum(r[0] for r in reports)
    count = sum(r[1] for r in reports)
    failures = heapq.nsmallest(cap, (f for r in reports for f in r[2]))
    return executed, count, failures


def _metadata(domain, subject, oracle, **extra):
    meta = {
        "domain_digest": domain.digest,
        "domain_cardinality": domain.cardinality,
        "subject": subject.id,
        "oracle": oracle.id,
    }
    meta.update({k: v for k, v in extra.items() if v is not None})
    return meta


def _check_mode(spec, mode):
    if spec.mode is not mode:
        raise ValidationError(f"campaign spec mode is {spec.mode.value}, expected {mode.value}")


def run_exhaustive(domain: InputDomain, subject: SubjectAdapter, oracle: Oracle,
                   spec: CampaignSpec) -> CampaignResult:
    """Execute every point of ``domain`` exactly once."""
    _check_mode(spec, Mode.EXHAUSTIVE)
    return _run_ranges(domain, subject, oracle, spec, None)


def run_partial_exhaustive(domain: InputDomain, predicate, subject: SubjectAdapter, oracle: Oracle,
                           spec: CampaignSpec) -> CampaignResult:
    """Execute exactly the points satisfying ``predicate`` (a built-in name or callable)."""
    _check_mode(spec, Mode.PARTIAL_EXHAUSTIVE)
    resolve_predicate(predicate)
    return _run_ranges(domain, subject, oracle, spec, predicate)


def _run_ranges(domain, subject, oracle, spec, predicate):
    tasks = [
        (domain, subject, oracle, "range", (r.start, r.end), spec.failure_cap, predicate)
        for r in partition(domain, spec.workers) if len(r)
    ] or [(domain, subject, oracle, "range", (0, 0), spec.failure_cap, predicate)]
    t0 = time.perf_counter()
    executed, count, failures = _merge(_execute(tasks, spec.workers), spec.failure_cap)
    elapsed = time.perf_counter() - t0
    pred_name = resolve_predicate(predicate)[0] if predicate is not None else None
    certificate = None
    if count == 0 and executed > 0:
        certificate = ExhaustiveCertificate(domain.digest, domain.cardinality, executed, pred_name)
    return CampaignResult(
        spec.mode, executed, count, failures, elapsed, spec.workers,
        certificate=certificate,
        metadata=_metadata(domain, subject, oracle, predicate=pred_name),
    )


def run_statistical(domain: InputDomain, profile: OperationalProfile, subject: SubjectAdapter,
                    oracle: Oracle, spec: CampaignSpec) -> CampaignResult:
    """Execute ``spec.n`` points drawn with replacement from ``profile``.

    Draw ``i`` is a pure function of ``(seed, i)``, so each worker generates
    its own contiguous run of draws and the merged result is identical for
    every worker count.
    """
    _check_mode(spec, Mode.STATISTICAL)
    validate_profile(profile, domain)
    n = int(spec.n)
    blocks = []
    q, r = divmod(n, spec.workers)
    first = 0
    for k in range(spec.workers):
        size = q + (1 if k < r else 0)
        if size:
            blocks.append((profile, spec.seed, first, size))
        first += size
    tasks = [(domain, subject, oracle, "draws", b, spec.failure_cap, None) for b in blocks]
    t0 = time.perf_counter()
    executed, count, failures = _merge(_execute(tasks, spec.workers), spec.failure_cap)
    elapsed = time.perf_counter() - t0
    claim = None
    if count == 0:
        claim = DemonstratedClaim(demonstrated_pfd(executed, spec.confidence), spec.confidence,
                                  Basis.PER_DEMAND, tests=executed)
    return CampaignResult(
        spec.mode, executed, count, failures, elapsed, spec.workers, claim=claim,
        metadata=_metadata(domain, subject, oracle, profile=profile.name, seed=spec.seed,
                           generator=rng.GENERATOR_NAME, confidence=spec.confidence),
    )


def run_campaign(domain, spec, subject, oracle, profiles=None):
    """Dispatch on ``spec.mode``; ``profiles`` maps profile names to profiles."""
    if spec.mode is Mode.EXHAUSTIVE:
        return run_exhaustive(domain, subject, oracle, spec)
    if spec.mode is Mode.PARTIAL_EXHAUSTIVE:
        return run_partial_exhaustive(domain, spec.predicate, subject, oracle, spec)
    if not profiles or spec.profile not in profiles:
        raise ValidationError(f"profile {spec.profile!r} not available")
    return run_statistical(domain, profiles[spec.profile], subject, oracle, spec)


def default_workers() -> int:
    raw = os.environ.get("RELIQUANT_WORKERS", "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return value if value >= 1 else 1


def derive_fault_tree_input(result: CampaignResult, confidence: float | None = None,
                            event_id: str = "sw_make_safe") -> BasicEvent:
    """Turn a claim or certificate into a basic event for a fault-tree document.

    Statistical claims give the claimed pfd bound (recomputed at ``confidence``
    if given). Exhaustive certificates give probability 0 for the stated
    domain only; the label records that caveat.
    """
    if result.claim is not None:
        claim = result.claim
        conf = claim.confidence if confidence is None else confidence
        bound = claim.bound if conf == claim.confidence else demonstrated_pfd(claim.tests, conf)
        meta = result.metadata
        label = (f"statistical, C={conf}, n={claim.tests}, seed={meta.get('seed')}, "
                 f"profile={meta.get('profile')}, generator={meta.get('generator')}")
        return BasicEvent(event_id, bound, label)
    if result.certificate is not None:
        cert = result.certificate
        scope = f"predicate {cert.predicate}" if cert.predicate else "full domain"
        label = (f"exhaustive over stated domain {cert.domain_digest} ({scope}, {cert.verified} points); "
                 "zero is a model assumption outside that domain")
        return BasicEvent(event_id, 0.0, label)
    raise NoClaimError("no claim available: campaign has failures or no evidence")


__all__ = [
    "Mode", "FailureKind", "SubjectAdapter", "Oracle", "OracleKind", "CampaignSpec",
    "CampaignResult", "Failure", "ExhaustiveCertificate", "run_exhaustive",
    "run_partial_exhaustive", "run_statistical", "run_campaign", "derive_fault_tree_input",
    "parse_campaign_spec", "format_campaign_spec", "subject_from_string", "oracle_from_string",
    "default_workers", "CampaignRuntimeError",
]
