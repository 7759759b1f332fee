"""Obfuscation-removal rewrites that disable risky PDF name tags in place.

Method 1 flips the case of every letter in seven targeted names (/AA,
/OpenAction, /JS, /JavaScript, /RichMedia, /Launch, /JBIG2Decode) so a
case-sensitive consumer no longer recognizes them, while file length and
every byte offset are preserved.  Method 2 additionally plants a
``_disarmed`` suffix right after each rewritten name, growing the file by 9
bytes per hit.  Neither repairs the xref table: the point is neutralizing
the name, not producing a pristine document.

Matching is escape-aware (``/J#61vaScript`` is the same name as
``/JavaScript``) and case-insensitive on the decoded name.  The
case-insensitive match is what makes Method 1 an involution: running it
twice restores the original bytes exactly, because the flipped spelling is
still matched on the second pass and flipped back.  The disclosed flip side:
a file that already contains an inverted spelling such as ``/aa`` gets it
rewritten to the canonical risky spelling ``/AA``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ByteStream, sha256_hex
from .tokenizer import _HEX_DIGITS, _is_regular

TARGET_TAGS = (
    "/AA",
    "/OpenAction",
    "/JS",
    "/JavaScript",
    "/RichMedia",
    "/Launch",
    "/JBIG2Decode",
)
DISARM_SUFFIX = b"_disarmed"

_TARGETS_LOWER = {tag[1:].lower().encode("ascii"): tag for tag in TARGET_TAGS}
_SLASH = 0x2F
_HASH = 0x23


@dataclass(frozen=True)
class Replacement:
    """One rewritten name: canonical tag, offset of its '/', old and new bytes."""

    tag: str
    offset: int
    original: bytes
    replacement: bytes


@dataclass(frozen=True)
class DisarmReport:
    method: int
    replacements: tuple[Replacement, ...]
    input_sha256: str
    output_sha256: str

    def __post_init__(self) -> None:
        offsets = [r.offset for r in self.replacements]
        if any(b >= a for a, b in zip(offsets[1:], offsets)):
            raise ValueError("replacement offsets must be strictly increasing")
        if bool(self.replacements) != (self.input_sha256 != self.output_sha256):
            raise ValueError("output must change exactly when something was replaced")


def _flip_case(byte: int) -> int:
    if 0x41 <= byte <= 0x5A or 0x61 <= byte <= 0x7A:
        return byte ^ 0x20
    return byte


def _scan_name(raw: bytes, slash: int) -> tuple[bytes, list[tuple[int, int]]]:
    """Decode the name starting after ``raw[slash]``.

    Returns the decoded name and one raw-byte span per decoded character
    (length 1 for a literal, 3 for a ``#xx`` escape).
    """
    decoded = bytearray()
    spans: list[tuple[int, int]] = []
    i, n = slash + 1, len(raw)
    while i < n:
        c = raw[i]
        if c == _HASH and i + 2 < n and raw[i + 1] in _HEX_DIGITS and raw[i + 2] in _HEX_DIGITS:
            decoded.append(int(raw[i + 1 : i + 3], 16))
            spans.append((i, i + 3))
            i += 3
        elif _is_regular(c):
            decoded.append(c)
            spans.append((i, i + 1))
            i += 1
        else:
            break
    return bytes(decoded), spans


def _rewrite_spans(raw: bytes, decoded: bytes, spans: list[tuple[int, int]]) -> bytes:
    """Case-flipped rendering of a matched name's raw bytes.

    A literal letter is flipped in place.  An escaped letter keeps its
    escape: the flip toggles bit 0x20, which only moves the high hex nibble
    between 4<->6 or 5<->7, so the rewrite swaps the first hex digit and
    keeps the second byte-for-byte (hex letter case included).
    """
    out = bytearray()
    for ch, (lo, hi) in zip(decoded, spans):
        flipped = _flip_case(ch)
        if hi - lo == 1:
            out.append(flipped)
        else:
            out.append(_HASH)
            out.append(b"0123456789abcdef"[flipped >> 4])
            out.append(raw[hi - 1])
    return bytes(out)


def _disarm(data: ByteStream, method: int) -> tuple[ByteStream, DisarmReport]:
    raw = data.data
    out = bytearray()
    copied = 0  # input bytes emitted so far
    replacements: list[Replacement] = []

    pos = raw.find(b"/")
    while pos != -1:
        decoded, spans = _scan_name(raw, pos)
        name_end = spans[-1][1] if spans else pos + 1
        tag = _TARGETS_LOWER.get(decoded.lower())
        if tag is not None:
            new_name = _rewrite_spans(raw, decoded, spans)
            if method == 2:
                new_name += DISARM_SUFFIX
            out += raw[copied:pos]
            out += b"/" + new_name
            copied = name_end
            replacements.append(
                Replacement(
                    tag=tag,
                    offset=pos,
                    original=raw[pos:name_end],
                    replacement=b"/" + new_name,
                )
            )
        pos = raw.find(b"/", name_end)
    out += raw[copied:]

    result = ByteStream(bytes(out), path=data.path)
    report = DisarmReport(
        method=method,
        replacements=tuple(replacements),
        input_sha256=data.sha256,
        output_sha256=result.sha256,
    )
    return result, report


def disarm_method1(data: ByteStream) -> tuple[ByteStream, DisarmReport]:
    """Case-flip targeted names in place; length-preserving involution."""
    return _disarm(data, method=1)


def disarm_method2(data: ByteStream) -> tuple[ByteStream, DisarmReport]:
    """Method 1 plus a ``_disarmed`` suffix after each rewritten name."""
    return _disarm(data, method=2)


def render_report(report: DisarmReport) -> str:
    """Structured text: a header line, then one line per replacement."""
    lines = [
        f"method\t{report.method}\tinput\t{report.input_sha256}\toutput\t{report.output_sha256}"
    ]
    for r in report.replacements:
        lines.append(f"{r.offset}\t{r.tag}\t{r.original.hex()}\t{r.replacement.hex()}")
    return "\n".join(lines) + "\n"
