"""Byte-level PDF keyword scanning and the 25-tag structural feature.

Works directly on raw bytes: no object-tree parse, no decompression.  A PDF
that never decompresses cleanly still yields counts, which is the point when
the input is hostile.  Name escapes (``/J#61vaScript``) are folded away by
:func:`normalize_names` before counting so an attacker cannot hide a tag from
the scan by hex-escaping one letter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ByteStream, FeatureVector

# PDF lexical classes.  A "regular" byte is anything that is neither
# whitespace nor a delimiter; a name token is / followed by a maximal run of
# regular bytes.
PDF_WHITESPACE = frozenset(b"\x00\t\n\x0c\r ")
PDF_DELIMITERS = frozenset(b"()<>[]{}/%")

_HEX_DIGITS = frozenset(b"0123456789abcdefABCDEF")
_SLASH = 0x2F
_HASH = 0x23

# The structural vocabulary, in feature-index order.  18 name tags that are
# matched as whole /-names (case-sensitive), and 7 bare keywords matched as
# raw substrings with subtractive disambiguation (an "obj" inside "endobj"
# is an endobj, not an obj).
RISKY_TAGS = (
    "/AA",
    "/AcroForm",
    "/Colors",
    "/EmbeddedFile",
    "/Encrypt",
    "/GoTo",
    "/GoToR",
    "/JBIG2Decode",
    "/JS",
    "/JavaScript",
    "/Launch",
    "/ObjStm",
    "/OpenAction",
    "/Page",
    "/RichMedia",
    "/SubmitForm",
    "/URI",
    "/XFA",
    "endobj",
    "endstream",
    "obj",
    "startxref",
    "stream",
    "trailer",
    "xref",
)

# keyword -> the longer keyword whose occurrences must not be double-counted
_SUBTRACT = {"obj": "endobj", "stream": "endstream", "xref": "startxref"}


def _is_regular(byte: int) -> bool:
    return byte not in PDF_WHITESPACE and byte not in PDF_DELIMITERS


@dataclass(frozen=True)
class TagVocabulary:
    """Ordered tag list defining the structural feature layout."""

    tags: tuple[str, ...] = RISKY_TAGS

    def __post_init__(self) -> None:
        if len(self.tags) != 25:
            raise ValueError(f"vocabulary must hold 25 tags, got {len(self.tags)}")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("vocabulary tags must be unique")

    def index(self, tag: str) -> int:
        return self.tags.index(tag)


DEFAULT_VOCABULARY = TagVocabulary()


@dataclass(frozen=True)
class KeywordCounts:
    """Per-tag occurrence counts plus the size of the scanned stream."""

    counts: dict[str, int]
    total_bytes: int


def normalize_names(data: ByteStream) -> ByteStream:
    """Decode ``#xx`` escapes inside name tokens; leave everything else alone.

    A name token starts at ``/`` and runs through the following regular
    bytes.  Inside one, ``#`` followed by two hex digits (either case) is
    replaced by the encoded byte; a malformed escape is kept verbatim.
    Escapes outside name tokens are untouched.  Output length never exceeds
    input length.
    """
    raw = data.data
    if _HASH not in raw:
        return data  # nothing to decode
    out = bytearray()
    in_name = False
    i, n = 0, len(raw)
    while i < n:
        c = raw[i]
        if in_name:
            if c == _HASH and i + 2 < n and raw[i + 1] in _HEX_DIGITS and raw[i + 2] in _HEX_DIGITS:
                out.append(int(raw[i + 1 : i + 3], 16))
                i += 3
                continue
            if not _is_regular(c):
                in_name = False
        if c == _SLASH:
            in_name = True
        out.append(c)
        i += 1
    return ByteStream(bytes(out), path=data.path)


def count_keywords(data: ByteStream, vocab: TagVocabulary = DEFAULT_VOCABULARY) -> KeywordCounts:
    """Count vocabulary tags in a byte stream.

    Name tags match only as the whole name: ``/JS`` in ``/JSOwnedName`` does
    not count because the name token there is ``JSOwnedName``.  Matching is
    exact on case.  Run :func:`normalize_names` first if escaped names should
    count.
    """
    raw = data.data
    counts = dict.fromkeys(vocab.tags, 0)

    name_map = {tag[1:].encode("ascii"): tag for tag in vocab.tags if tag.startswith("/")}
    pos = raw.find(b"/")
    n = len(raw)
    while pos != -1:
        end = pos + 1
        while end < n and _is_regular(raw[end]):
            end += 1
        tag = name_map.get(raw[pos + 1 : end])
        if tag is not None:
            counts[tag] += 1
        pos = raw.find(b"/", pos + 1)

    bare = [tag for tag in vocab.tags if not tag.startswith("/")]
    raw_hits = {kw: raw.count(kw.encode("ascii")) for kw in bare}
    for kw in bare:
        longer = _SUBTRACT.get(kw)
        counts[kw] = raw_hits[kw] - (raw_hits[longer] if longer else 0)

    return KeywordCounts(counts=counts, total_bytes=n)


def keyword_feature(counts: KeywordCounts, vocab: TagVocabulary = DEFAULT_VOCABULARY) -> FeatureVector:
    """Lay counts out as the 25-entry structural vector, in vocabulary order."""
    try:
        values = np.array([counts.counts[tag] for tag in vocab.tags], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"counts missing vocabulary tag {exc.args[0]!r}") from exc
    return FeatureVector(kind="structural", values=values)


def structural_feature(data: ByteStream, vocab: TagVocabulary = DEFAULT_VOCABULARY) -> FeatureVector:
    """Normalize escapes, count, and vectorize in one step."""
    return keyword_feature(count_keywords(normalize_names(data), vocab), vocab)
