"""Sandbox-report parsing and the API-call bag-of-words feature.

Reports are a small JSON subset (see docs/formats.md):

    {"behavior": [{"api": "NtOpenFile", "status": 1}, ...]}

``status`` is an opaque 0/1 outcome flag.  Calls from all processes arrive
flattened into the one list.  A report without a ``behavior`` key is an
empty (still valid) report.  Anything structurally off is an error: these
files come from an analysis sandbox, and a half-read report must not turn
into a silently empty feature.

The feature is a count vector over a corpus-fitted vocabulary of distinct
(api, status) pairs; pairs outside the vocabulary are dropped.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ByteStream, DataError, FeatureVector, sha256_hex


class ReportParseError(DataError):
    """Malformed sandbox report; carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class ApiReport:
    """Flattened call log of one sample: (api_name, status) with multiplicity."""

    sample_id: str
    calls: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class ApiVocabulary:
    """Ordered distinct (api, status) pairs with their corpus totals.

    Order: descending total count, then api name, then status.  ``version``
    is a hash of the ordered entries, so equal vocabularies share it and any
    reordering or edit changes it.
    """

    entries: tuple[tuple[str, int], ...]
    counts: tuple[int, ...]
    version: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if len(self.entries) != len(set(self.entries)):
            raise ValueError("vocabulary entries must be unique")
        if len(self.counts) != len(self.entries):
            raise ValueError("one count per entry required")
        digest = sha256_hex(
            "\n".join(f"{api}\t{status}" for api, status in self.entries).encode("utf-8")
        )
        object.__setattr__(self, "version", digest)

    def __len__(self) -> int:
        return len(self.entries)


def parse_report(data: ByteStream) -> ApiReport:
    """Parse one sandbox report; fail closed on anything malformed."""
    try:
        text = data.data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ReportParseError("report is not valid UTF-8", offset=exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportParseError(f"report is not valid JSON: {exc.msg}", offset=exc.pos) from exc

    if not isinstance(doc, dict):
        raise ReportParseError("report root must be an object")
    behavior = doc.get("behavior")
    calls: list[tuple[str, int]] = []
    if behavior is not None:
        if not isinstance(behavior, list):
            raise ReportParseError("'behavior' must be a list of call entries")
        for i, entry in enumerate(behavior):
            if not isinstance(entry, dict):
                raise ReportParseError(f"behavior[{i}] is not an object")
            api = entry.get("api")
            status = entry.get("status")
            if not isinstance(api, str) or not api:
                raise ReportParseError(f"behavior[{i}].api must be a non-empty string")
            if "\t" in api or "\n" in api or "\r" in api:
                raise ReportParseError(f"behavior[{i}].api contains control characters")
            # bool is an int subclass; a JSON true/false status is malformed
            if isinstance(status, bool) or status not in (0, 1):
                raise ReportParseError(f"behavior[{i}].status must be 0 or 1")
            calls.append((api, int(status)))
    return ApiReport(sample_id=data.sha256, calls=tuple(calls))


def build_api_vocabulary(reports: list[ApiReport] | tuple[ApiReport, ...]) -> ApiVocabulary:
    """Fit the vocabulary on a report corpus.

    Permutation-invariant: any reordering of the same multiset of reports
    yields an identical vocabulary (and version).
    """
    if not reports:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    totals: Counter[tuple[str, int]] = Counter()
    for report in reports:
        totals.update(report.calls)
    ordered = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    return ApiVocabulary(
        entries=tuple(pair for pair, _ in ordered),
        counts=tuple(count for _, count in ordered),
    )


def api_call_feature(report: ApiReport, vocab: ApiVocabulary) -> FeatureVector:
    """Raw per-pair counts laid out in vocabulary order; OOV pairs dropped.

    Additive: the feature of a concatenated call log is the sum of the
    parts' features.
    """
    index = {pair: i for i, pair in enumerate(vocab.entries)}
    values = np.zeros(len(vocab), dtype=np.float64)
    for call in report.calls:
        slot = index.get(call)
        if slot is not None:
            values[slot] += 1.0
    return FeatureVector(kind="apicalls", values=values)


def save_vocabulary(vocab: ApiVocabulary, path: str | Path) -> None:
    """One ``api<TAB>status<TAB>count`` line per entry, in vocabulary order."""
    lines = [
        f"{api}\t{status}\t{count}"
        for (api, status), count in zip(vocab.entries, vocab.counts)
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_vocabulary(path: str | Path) -> ApiVocabulary:
    entries: list[tuple[str, int]] = []
    counts: list[int] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"vocabulary line {lineno} is not api<TAB>status<TAB>count")
        api, status_text, count_text = parts
        try:
            status, count = int(status_text), int(count_text)
        except ValueError as exc:
            raise DataError(f"vocabulary line {lineno} has non-integer fields") from exc
        if status not in (0, 1) or count < 0:
            raise DataError(f"vocabulary line {lineno} is out of range")
        entries.append((api, status))
        counts.append(count)
    return ApiVocabulary(entries=tuple(entries), counts=tuple(counts))
