"""Campaign report files: ``key=value`` lines plus one ``failure:`` record per kept failure.

Values are percent-encoded where they could contain whitespace, ``=`` or
separators, so every line stays greppable and diff-friendly::

    format=reliquant-report/1
    mode=exhaustive
    executed=1048576
    failure_count=0
    ...
    failure: index=24576 draw=-1 kind=MISMATCH point=24,0,0,0,0,0 observed=0 expected=1
"""

from __future__ import annotations

import re
from urllib.parse import quote, unquote

from .campaign import CampaignResult, ExhaustiveCertificate, Failure, Mode
from .errors import ValidationError
from .stats import Basis, DemonstratedClaim

FORMAT = "reliquant-report/1"
_SAFE = "/:._-+@"
_INT_META = {"domain_cardinality", "seed"}
_FLOAT_META = {"confidence"}
_INT = re.compile(r"^-?\d+$")


def _q(text) -> str:
    return quote(str(text), safe=_SAFE)


def format_report(result: CampaignResult) -> str:
    lines = [
        "# reliquant campaign report",
        f"format={FORMAT}",
        f"mode={result.mode.value}",
        f"executed={result.executed}",
        f"failure_count={result.failure_count}",
        f"failures_kept={len(result.failures)}",
        f"elapsed={result.elapsed!r}",
        f"workers={result.workers}",
        f"throughput={result.throughput!r}",
        f"throughput_per_worker={result.throughput_per_worker!r}",
    ]
    for key in sorted(result.metadata):
        value = result.metadata[key]
        lines.append(f"meta.{key}={value!r}" if isinstance(value, float) else f"meta.{key}={_q(value)}")
    if result.claim is not None:
        c = result.claim
        lines += [f"claim.basis={c.basis.value}", f"claim.bound={c.bound!r}", f"claim.confidence={c.confidence!r}"]
        if c.tests is not None:
            lines.append(f"claim.tests={c.tests}")
        if c.hours is not None:
            lines.append(f"claim.hours={c.hours!r}")
    if result.certificate is not None:
        cert = result.certificate
        lines += [
            f"certificate.domain_digest={cert.domain_digest}",
            f"certificate.domain_cardinality={cert.domain_cardinality}",
            f"certificate.verified={cert.verified}",
        ]
        if cert.predicate is not None:
            lines.append(f"certificate.predicate={_q(cert.predicate)}")
    for f in result.failures:
        point = ",".join(_q(v) for v in f.point)
        observed = "~" if f.observed is None else _q("\t".join(f.observed))
        lines.append(
            f"failure: index={f.index} draw={f.draw} kind={f.kind} point={point} "
            f"observed={observed} expected={_q(f.expected)}"
        )
    return "\n".join(lines) + "\n"


def write_report(result: CampaignResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_report(result))


def _value(text):
    text = unquote(text)
    return int(text) if _INT.match(text) else text


def parse_report(text: str) -> CampaignResult:
    """Inverse of :func:`format_report`. Raises :class:`ValidationError` on corrupt input."""
    top: dict[str, str] = {}
    meta: dict = {}
    claim: dict[str, str] = {}
    cert: dict[str, str] = {}
    failures = []
    try:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            if line.startswith("failure:"):
                fields = dict(item.split("=", 1) for item in line[len("failure:"):].split())
                point = tuple(_value(v) for v in fields["point"].split(",")) if fields["point"] else ()
                observed = None if fields["observed"] == "~" else tuple(unquote(fields["observed"]).split("\t"))
                if observed == ("",):
                    observed = ()
                failures.append(Failure(int(fields["index"]), int(fields["draw"]), fields["kind"], point,
                                        observed, unquote(fields["expected"])))
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValidationError(f"line {lineno}: expected key=value")
            if key.startswith("meta."):
                name = key[5:]
                if name in _INT_META:
                    meta[name] = int(value)
                elif name in _FLOAT_META:
                    meta[name] = float(value)
                else:
                    meta[name] = unquote(value)
            elif key.startswith("claim."):
                claim[key[6:]] = value
            elif key.startswith("certificate."):
                cert[key[12:]] = value
            else:
                top[key] = value
        if top.get("format") != FORMAT:
            raise ValidationError(f"not a {FORMAT} report")
        result = CampaignResult(
            Mode(top["mode"]), int(top["executed"]), int(top["failure_count"]), failures,
            float(top["elapsed"]), int(top["workers"]), metadata=meta,
        )
        if len(failures) != int(top["failures_kept"]):
            raise ValidationError("report is truncated: failure records missing")
        if claim:
            result.claim = DemonstratedClaim(
                float(claim["bound"]), float(claim["confidence"]), Basis(claim["basis"]),
                tests=int(claim["tests"]) if "tests" in claim else None,
                hours=float(claim["hours"]) if "hours" in claim else None,
            )
        if cert:
            result.certificate = ExhaustiveCertificate(
                cert["domain_digest"], int(cert["domain_cardinality"]), int(cert["verified"]),
                unquote(cert["predicate"]) if "predicate" in cert else None,
            )
    except ValidationError:
        raise
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"corrupt report: {exc!r}") from exc
    return result


def read_report(path) -> CampaignResult:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot read report {path}: {exc}") from exc
    return parse_report(text)


def summarize(result: CampaignResult, max_failures: int = 10) -> str:
    """Human-readable summary of a campaign result."""
    meta = result.metadata
    out = [
        f"mode:        {result.mode.value}",
        f"subject:     {meta.get('subject', '?')}",
        f"oracle:      {meta.get('oracle', '?')}",
        f"domain:      {meta.get('domain_digest', '?')} ({meta.get('domain_cardinality', '?')} points)",
        f"executed:    {result.executed}",
        f"failures:    {result.failure_count}",
        f"elapsed:     {result.elapsed:.3f} s",
        f"throughput:  {result.throughput:.0f} cases/s ({result.throughput_per_worker:.0f} per worker, "
        f"{result.workers} workers)",
    ]
    if "seed" in meta:
        out.append(f"seed:        {meta['seed']} ({meta.get('generator', '?')}, profile {meta.get('profile', '?')})")
    if result.claim is not None:
        c = result.claim
        out.append(f"claim:       pfd <= {c.bound:.4g} at confidence {c.confidence:g} "
                   f"({c.tests} failure-free tests)")
    elif result.certificate is not None:
        cert = result.certificate
        scope = f"points satisfying {cert.predicate}" if cert.predicate else "all points"
        out.append(f"certificate: exhaustively verified over stated domain: {cert.verified} {scope}")
    else:
        out.append("claim:       none")
    if result.failures:
        shown = result.failures[:max_failures]
        out.append(f"first {len(shown)} of {result.failure_count} failures:")
        for f in shown:
            where = f"index {f.index}" + (f" draw {f.draw}" if f.draw >= 0 else "")
            observed = "<none>" if f.observed is None else "\t".join(f.observed)
            out.append(f"  {where}: {f.kind} point={f.point} observed={observed!r} expected={f.expected!r}")
    return "\n".join(out) + "\n"
