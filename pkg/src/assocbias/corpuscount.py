"""Streaming corpus profiler: pronoun-class sentence occurrence counts
and pro-/anti-stereotypical occupation co-occurrence counts.

Input is pre-segmented text, one sentence per line (segmentation quality
would otherwise dominate count differences; an approximate splitter is
available as a CLI convenience). Scans over line chunks merge exactly,
so the profile of a corpus is independent of how it is split across
workers.
"""

from __future__ import annotations

import gzip
import os
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence

from .errors import LexiconMismatch, SchemaError, Utf8Error

CLASSES = ("male", "female", "collective")
STEREOTYPES = ("male_occ", "female_occ")
MODES = ("independent", "exclusive")

_EDGE_PUNCT = string.punctuation


def tokenize_sentence(line: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation per token."""
    return [t for t in (tok.strip(_EDGE_PUNCT) for tok in line.lower().split()) if t]


def _lower_set(values: Iterable[str], what: str) -> frozenset[str]:
    out = frozenset(v.lower() for v in values)
    if any(not v for v in out):
        raise SchemaError(f"{what} contains an empty token")
    return out


@dataclass(frozen=True)
class PronounLexicon:
    """Surface forms per pronoun class; the sets must be pairwise disjoint.

    The defaults carry the nominative, accusative and possessive
    inflections of each class ("his" doubles as prenominal and
    predicative possessive, so the male set has three surface forms).
    Reflexives are excluded by default; the lexicon is data and can be
    overridden.
    """

    male: frozenset[str] = frozenset({"he", "him", "his"})
    female: frozenset[str] = frozenset({"she", "her", "hers"})
    collective: frozenset[str] = frozenset({"they", "them", "their", "theirs"})

    def __post_init__(self) -> None:
        for name in CLASSES:
            object.__setattr__(self, name, _lower_set(getattr(self, name), f"{name} pronouns"))
        if self.male & self.female or self.male & self.collective or self.female & self.collective:
            raise SchemaError("pronoun classes must be pairwise disjoint")

    def tokens(self, cls: str) -> frozenset[str]:
        return getattr(self, cls)


@dataclass(frozen=True)
class OccupationLexicon:
    """Stereotyped occupation phrases, each one or more lowercase tokens."""

    male_stereotyped: tuple[tuple[str, ...], ...] = ()
    female_stereotyped: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        for name in ("male_stereotyped", "female_stereotyped"):
            phrases = tuple(
                tuple(w.lower() for w in (p.split() if isinstance(p, str) else p))
                for p in getattr(self, name)
            )
            if any(len(p) == 0 for p in phrases):
                raise SchemaError(f"{name} contains an empty phrase")
            object.__setattr__(self, name, phrases)
        if set(self.male_stereotyped) & set(self.female_stereotyped):
            raise SchemaError("occupation phrase lists must be disjoint")


@dataclass(frozen=True)
class SentenceTally:
    """Contribution of one sentence: classes present plus occupation matches."""

    classes: frozenset[str]
    male_occ: int = 0
    female_occ: int = 0


class _PhraseMatcher:
    """Greedy longest-first, non-overlapping phrase matching over tokens."""

    def __init__(self, occ: OccupationLexicon):
        index: dict[str, list[tuple[tuple[str, ...], int]]] = {}
        for stereo, phrases in enumerate((occ.male_stereotyped, occ.female_stereotyped)):
            for phrase in phrases:
                index.setdefault(phrase[0], []).append((phrase, stereo))
        for cands in index.values():
            cands.sort(key=lambda c: (-len(c[0]), c[0]))
        self._index = index

    def count(self, tokens: Sequence[str]) -> tuple[int, int]:
        if not self._index:
            return 0, 0
        counts = [0, 0]
        i, n = 0, len(tokens)
        index = self._index
        while i < n:
            cands = index.get(tokens[i])
            if cands:
                for phrase, stereo in cands:
                    end = i + len(phrase)
                    if end <= n and tuple(tokens[i:end]) == phrase:
                        counts[stereo] += 1
                        i = end
                        break
                else:
                    i += 1
            else:
                i += 1
        return counts[0], counts[1]


def _tally(tokens: Sequence[str], pron: PronounLexicon, matcher: _PhraseMatcher,
           mode: str) -> SentenceTally:
    token_set = set(tokens)
    present = [cls for cls in CLASSES if token_set & pron.tokens(cls)]
    if mode == "exclusive" and len(present) > 1:
        present = []
    if not present:
        return SentenceTally(frozenset())
    male_occ, female_occ = matcher.count(tokens)
    return SentenceTally(frozenset(present), male_occ, female_occ)


def classify_sentence(tokens: Sequence[str], pron: PronounLexicon,
                      occ: OccupationLexicon, mode: str = "independent") -> SentenceTally:
    """Tally one pre-tokenized, lowercased sentence.

    Sentence occurrence is binary per class; occupation matches are
    counted once per occurrence, and only when at least one pronoun
    class is present (occupations are profiled within pronoun-bearing
    sentences). In "exclusive" mode a sentence with pronouns of more
    than one class counts for none of them.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return _tally(tokens, pron, _PhraseMatcher(occ), mode)


@dataclass(frozen=True)
class CooccurrenceReport:
    """Corpus profile: per-class sentence counts and occupation associations.

    For the gendered classes, pro-stereotypical counts are views onto
    assoc: pro(male) is assoc[male][male_occ] and anti(male) is
    assoc[male][female_occ], symmetrically for female.
    """

    total_sentences: int
    sentences_with: Mapping[str, int]
    assoc: Mapping[str, Mapping[str, int]]
    pronouns: PronounLexicon = field(default_factory=PronounLexicon)
    occupations: OccupationLexicon = field(default_factory=OccupationLexicon)
    mode: str = "independent"

    def pro(self, cls: str) -> int:
        if cls == "male":
            return self.assoc["male"]["male_occ"]
        if cls == "female":
            return self.assoc["female"]["female_occ"]
        raise ValueError("pro/anti views exist only for the gendered classes")

    def anti(self, cls: str) -> int:
        if cls == "male":
            return self.assoc["male"]["female_occ"]
        if cls == "female":
            return self.assoc["female"]["male_occ"]
        raise ValueError("pro/anti views exist only for the gendered classes")

    def to_dict(self) -> dict:
        classes = {}
        for cls in CLASSES:
            entry = {
                "sentences": self.sentences_with[cls],
                "male_occ": self.assoc[cls]["male_occ"],
                "female_occ": self.assoc[cls]["female_occ"],
            }
            if cls in ("male", "female"):
                entry["pro"] = self.pro(cls)
                entry["anti"] = self.anti(cls)
            classes[cls] = entry
        return {
            "total_sentences": self.total_sentences,
            "classes": classes,
            "mode": self.mode,
        }


def empty_report(pron: Optional[PronounLexicon] = None,
                 occ: Optional[OccupationLexicon] = None,
                 mode: str = "independent") -> CooccurrenceReport:
    pron = pron if pron is not None else PronounLexicon()
    occ = occ if occ is not None else OccupationLexicon()
    return CooccurrenceReport(
        0,
        {cls: 0 for cls in CLASSES},
        {cls: {s: 0 for s in STEREOTYPES} for cls in CLASSES},
        pron,
        occ,
        mode,
    )


def scan(lines: Iterable[str | bytes], pron: Optional[PronounLexicon] = None,
         occ: Optional[OccupationLexicon] = None,
         mode: str = "independent") -> CooccurrenceReport:
    """Fold every line (one sentence each) into a co-occurrence report."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    pron = pron if pron is not None else PronounLexicon()
    occ = occ if occ is not None else OccupationLexicon()
    matcher = _PhraseMatcher(occ)
    total = 0
    sentences_with = {cls: 0 for cls in CLASSES}
    assoc = {cls: {s: 0 for s in STEREOTYPES} for cls in CLASSES}
    for line_no, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise Utf8Error(str(e), line=line_no) from e
        total += 1
        tally = _tally(tokenize_sentence(raw), pron, matcher, mode)
        for cls in tally.classes:
            sentences_with[cls] += 1
            assoc[cls]["male_occ"] += tally.male_occ
            assoc[cls]["female_occ"] += tally.female_occ
    return CooccurrenceReport(total, sentences_with, assoc, pron, occ, mode)


def merge(a: CooccurrenceReport, b: CooccurrenceReport) -> CooccurrenceReport:
    """Componentwise sum; associative and commutative, so chunked scans
    merged in any order equal the serial scan exactly."""
    if a.pronouns != b.pronouns or a.occupations != b.occupations or a.mode != b.mode:
        raise LexiconMismatch("reports were built with different lexicons or modes")
    return CooccurrenceReport(
        a.total_sentences + b.total_sentences,
        {cls: a.sentences_with[cls] + b.sentences_with[cls] for cls in CLASSES},
        {
            cls: {s: a.assoc[cls][s] + b.assoc[cls][s] for s in STEREOTYPES}
            for cls in CLASSES
        },
        a.pronouns,
        a.occupations,
        a.mode,
    )


# --- file handling -----------------------------------------------------------

GZIP_MAGIC = b"\x1f\x8b"


def _open_lines(path: str) -> IO[bytes]:
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == GZIP_MAGIC:
        return gzip.open(path, "rb")
    return open(path, "rb")


def scan_path(path: str, pron: Optional[PronounLexicon] = None,
              occ: Optional[OccupationLexicon] = None,
              mode: str = "independent") -> CooccurrenceReport:
    """Serial scan of one file (gzip detected by magic bytes)."""
    with _open_lines(path) as fh:
        return scan(fh, pron, occ, mode)


def _chunk_ranges(path: str, chunks: int) -> list[tuple[int, int]]:
    """Byte ranges aligned to line boundaries covering the whole file."""
    size = os.path.getsize(path)
    if size == 0 or chunks <= 1:
        return [(0, size)]
    bounds = [0]
    with open(path, "rb") as fh:
        for k in range(1, chunks):
            target = size * k // chunks
            if target <= bounds[-1]:
                continue
            fh.seek(target)
            fh.readline()  # advance to the next line start
            pos = fh.tell()
            if bounds[-1] < pos < size:
                bounds.append(pos)
    bounds.append(size)
    return list(zip(bounds[:-1], bounds[1:]))


def _scan_range(path: str, start: int, end: int, pron, occ, mode) -> CooccurrenceReport:
    def lines():
        with open(path, "rb") as fh:
            fh.seek(start)
            while fh.tell() < end:
                yield fh.readline()

    return scan(lines(), pron, occ, mode)


def scan_path_chunked(path: str, pron: Optional[PronounLexicon] = None,
                      occ: Optional[OccupationLexicon] = None,
                      mode: str = "independent", chunks: int = 8,
                      workers: int = 1) -> CooccurrenceReport:
    """Chunked scan of one uncompressed file, merged in chunk order.

    The result is bit-identical to scan_path for any chunk count and any
    worker count; gzip input falls back to a single serial chunk.
    """
    pron = pron if pron is not None else PronounLexicon()
    occ = occ if occ is not None else OccupationLexicon()
    with open(path, "rb") as probe:
        if probe.read(2) == GZIP_MAGIC:
            return scan_path(path, pron, occ, mode)
    ranges = _chunk_ranges(path, chunks)
    if workers <= 1 or len(ranges) == 1:
        parts = [_scan_range(path, s, e, pron, occ, mode) for s, e in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda r: _scan_range(path, r[0], r[1], pron, occ, mode), ranges)
            )
    report = parts[0]
    for part in parts[1:]:
        report = merge(report, part)
    return report


# --- lexicon files and rendering ----------------------------------------------

def load_pronoun_lexicon(data: bytes | str) -> PronounLexicon:
    import json

    doc = json.loads(data)
    if not isinstance(doc, dict) or set(doc) - set(CLASSES):
        raise SchemaError(f"pronoun lexicon must be an object with keys from {CLASSES}")
    kwargs = {cls: frozenset(doc[cls]) for cls in CLASSES if cls in doc}
    return PronounLexicon(**kwargs)


def load_occupation_lexicon(data: bytes | str) -> OccupationLexicon:
    import json

    doc = json.loads(data)
    expected = {"male_stereotyped", "female_stereotyped"}
    if not isinstance(doc, dict) or set(doc) - expected:
        raise SchemaError(f"occupation lexicon must be an object with keys from {sorted(expected)}")
    return OccupationLexicon(
        male_stereotyped=tuple(doc.get("male_stereotyped", ())),
        female_stereotyped=tuple(doc.get("female_stereotyped", ())),
    )


def _pct(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:.1f}%" if whole else "—"


def render_table(report: CooccurrenceReport) -> str:
    """Aligned-text table: per-class occurrences, associations, pro/anti."""
    header = ("class", "sentences", "% of total", "m-occ", "f-occ", "pro", "anti", "% pro")
    rows = [header]
    for cls in CLASSES:
        n = report.sentences_with[cls]
        m = report.assoc[cls]["male_occ"]
        f = report.assoc[cls]["female_occ"]
        if cls in ("male", "female"):
            pro, anti = report.pro(cls), report.anti(cls)
            pro_s, anti_s, pct = str(pro), str(anti), _pct(pro, pro + anti)
        else:
            pro_s = anti_s = pct = "—"
        rows.append((cls, str(n), _pct(n, report.total_sentences), str(m), str(f),
                     pro_s, anti_s, pct))
    rows.append(("total", str(report.total_sentences), "", "", "", "", "", ""))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
