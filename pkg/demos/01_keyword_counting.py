"""
Counting risky name tags in raw PDF bytes
=========================================

The structural feature never parses the document tree: it scans raw bytes,
folds ``#xx`` name escapes, and counts a fixed 25-tag vocabulary.  Hostile
files that break real parsers still produce a full vector.
"""

from maldoc import (
    ByteStream,
    DEFAULT_VOCABULARY,
    count_keywords,
    normalize_names,
    structural_feature,
)

# ## A tiny handcrafted document

doc = b"""%PDF-1.5
1 0 obj << /Type /Catalog /OpenAction 2 0 R /AA 3 0 R >> endobj
2 0 obj << /S /J#61vaScript /JS (app.alert('hi')) >> endobj
stream
payload bytes, not parsed
endstream
trailer << /Root 1 0 R >>
startxref
116
%%EOF
"""

# ## Escape folding first

# the action dictionary hides /JavaScript behind a hex escape; one
# normalization pass makes it visible to the scanner
folded = normalize_names(ByteStream(doc))
print("escape folded out:", b"/JavaScript" in folded.data)

# ## Raw counts

counts = count_keywords(folded)
for tag, n in sorted(counts.counts.items()):
    if n:
        print(f"{tag:>14}  {n}")

# note the disambiguation: "startxref" above did not count as "xref",
# and "endstream"/"endobj" did not double-count their prefixes
print("xref:", counts.counts["xref"], " stream:", counts.counts["stream"])

# ## The 25-entry vector

vec = structural_feature(ByteStream(doc))
print("kind:", vec.kind, " dims:", vec.values.shape[0])
for tag in ("/OpenAction", "/JavaScript", "/JS", "/AA"):
    print(f"{tag:>14}  index {DEFAULT_VOCABULARY.index(tag):2d}  count {vec.values[DEFAULT_VOCABULARY.index(tag)]:.0f}")
