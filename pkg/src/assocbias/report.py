"""Suite aggregation and rendering: per-test result tables with
significance marks, encoding-level overlap classification, and meta
proportion tables."""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import AssociationResult, EncodingLevel
from .errors import MismatchedPair, UnrecognizedName
from .testspec import category_for_id, format_test_name, parse_test_name

FORMATS = ("csv", "markdown", "json")

CSV_COLUMNS = (
    "category", "test_id", "model_id", "level", "statistic",
    "effect_size", "p_value", "method", "n_samples", "significant",
)


class OverlapMark(str, enum.Enum):
    """Where a (test, model) pair showed a significant effect.

    ASCII tags rather than symbols, so tables stay terminal- and
    CSV-safe.
    """

    CWORD_ONLY = "cword-only"
    SENT_ONLY = "sent-only"
    BOTH = "both"
    NEITHER = "neither"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SuiteResult:
    """An ordered collection of test results plus category metadata."""

    results: tuple[AssociationResult, ...]
    categories: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "results", tuple(self.results))
        object.__setattr__(self, "categories", dict(self.categories))
        keys = [(r.test_id, r.model_id, r.level) for r in self.results]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise ValueError(f"duplicate (test_id, model_id, level) in suite: {dupes}")

    def category_of(self, result: AssociationResult) -> str:
        cat = self.categories.get(result.test_id)
        return cat if cat is not None else category_for_id(result.test_id)


def _base_id(test_id: str) -> str:
    """Level-independent identity of a test (word/sentence ids collapse)."""
    try:
        info = parse_test_name(test_id)
    except UnrecognizedName:
        return test_id
    return format_test_name(
        type(info)(EncodingLevel.WORD, info.family, info.uses_terms_variant, info.index)
    )


def classify_overlap(cword: AssociationResult, sent: AssociationResult) -> OverlapMark:
    """Which encoding level(s) of the same test and model were significant."""
    if cword.level is not EncodingLevel.CWORD or sent.level is not EncodingLevel.SENTENCE:
        raise MismatchedPair(
            f"expected a (cword, sentence) pair, got ({cword.level.value}, {sent.level.value})"
        )
    if cword.model_id != sent.model_id:
        raise MismatchedPair(f"models differ: {cword.model_id!r} vs {sent.model_id!r}")
    if _base_id(cword.test_id) != _base_id(sent.test_id):
        raise MismatchedPair(f"tests differ: {cword.test_id!r} vs {sent.test_id!r}")
    if cword.significant and sent.significant:
        return OverlapMark.BOTH
    if cword.significant:
        return OverlapMark.CWORD_ONLY
    if sent.significant:
        return OverlapMark.SENT_ONLY
    return OverlapMark.NEITHER


def suite_overlaps(suite: SuiteResult) -> dict[tuple[str, str], OverlapMark]:
    """Overlap marks for every (base test, model) with exactly one cword
    and one sentence result."""
    pairs: dict[tuple[str, str], dict[EncodingLevel, list[AssociationResult]]] = {}
    for r in suite.results:
        if r.level in (EncodingLevel.CWORD, EncodingLevel.SENTENCE):
            key = (_base_id(r.test_id), r.model_id)
            pairs.setdefault(key, {}).setdefault(r.level, []).append(r)
    marks = {}
    for key, by_level in pairs.items():
        cwords = by_level.get(EncodingLevel.CWORD, [])
        sents = by_level.get(EncodingLevel.SENTENCE, [])
        if len(cwords) == 1 and len(sents) == 1:
            marks[key] = classify_overlap(cwords[0], sents[0])
    return marks


@dataclass(frozen=True)
class MetaRow:
    group: tuple[str, ...]
    significant_positive: int
    total: int

    @property
    def proportion(self) -> Optional[float]:
        return self.significant_positive / self.total if self.total else None


def aggregate_meta(suite: SuiteResult,
                   keys: Sequence[str] = ("model_id", "category")) -> list[MetaRow]:
    """Proportion of significant positive effects per group.

    Group keys may be any of: model_id, category, level, family.
    """
    def key_of(r: AssociationResult) -> tuple[str, ...]:
        parts = []
        for k in keys:
            if k == "model_id":
                parts.append(r.model_id)
            elif k == "category":
                parts.append(suite.category_of(r))
            elif k == "level":
                parts.append(r.level.value)
            elif k == "family":
                try:
                    parts.append(parse_test_name(r.test_id).family)
                except UnrecognizedName:
                    parts.append("other")
            else:
                raise ValueError(f"unknown grouping key {k!r}")
        return tuple(parts)

    groups: dict[tuple[str, ...], list[AssociationResult]] = {}
    for r in suite.results:
        groups.setdefault(key_of(r), []).append(r)
    rows = []
    for group in sorted(groups):
        rs = groups[group]
        hits = sum(1 for r in rs if r.significant and r.effect_size > 0)
        rows.append(MetaRow(group, hits, len(rs)))
    return rows


def format_proportion(row: MetaRow) -> str:
    return "—" if row.proportion is None else f"{row.proportion:.2f}"


# --- rendering -----------------------------------------------------------

def _sorted_results(suite: SuiteResult) -> list[AssociationResult]:
    return sorted(
        suite.results,
        key=lambda r: (suite.category_of(r), r.test_id, r.model_id, r.level.value),
    )


def _effect(r: AssociationResult) -> str:
    """Signed two-decimal effect size, starred when significant.

    Negative effects are printed but can never carry the star: the
    one-sided p-value makes a significant negative effect impossible.
    """
    return f"{r.effect_size:+.2f}" + ("*" if r.significant else "")


def _render_csv(suite: SuiteResult) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in _sorted_results(suite):
        writer.writerow([
            suite.category_of(r), r.test_id, r.model_id, r.level.value,
            repr(r.statistic), _effect(r), repr(r.p_value), r.method,
            r.n_samples, "true" if r.significant else "false",
        ])
    return buf.getvalue().encode("utf-8")


def _render_markdown(suite: SuiteResult) -> bytes:
    marks = suite_overlaps(suite)
    lines = [
        "| category | test | model | level | s | d | p | overlap |",
        "| --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for r in _sorted_results(suite):
        mark = marks.get((_base_id(r.test_id), r.model_id))
        tag = mark.value if mark is not None and r.level is not EncodingLevel.WORD else ""
        lines.append(
            f"| {suite.category_of(r)} | {r.test_id} | {r.model_id} | {r.level.value} "
            f"| {r.statistic:+.2f} | {_effect(r)} | {r.p_value:.4g} | {tag} |"
        )
    meta = aggregate_meta(suite)
    if meta:
        lines += [
            "",
            "| model | category | significant positive | total | proportion |",
            "| --- | --- | --- | --- | --- |",
        ]
        for row in meta:
            lines.append(
                f"| {row.group[0]} | {row.group[1]} | {row.significant_positive} "
                f"| {row.total} | {format_proportion(row)} |"
            )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _result_to_dict(r: AssociationResult) -> dict:
    return {
        "test_id": r.test_id,
        "model_id": r.model_id,
        "level": r.level.value,
        "statistic": r.statistic,
        "effect_size": r.effect_size,
        "p_value": r.p_value,
        "method": r.method,
        "n_samples": r.n_samples,
        "seed": r.seed,
        "significant": r.significant,
    }


def _render_json(suite: SuiteResult) -> bytes:
    doc = {
        "results": [_result_to_dict(r) for r in _sorted_results(suite)],
        "categories": {k: suite.categories[k] for k in sorted(suite.categories)},
    }
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def render(suite: SuiteResult, format: str = "markdown") -> bytes:
    """Deterministic rendering; JSON is the canonical machine format."""
    if format == "csv":
        return _render_csv(suite)
    if format == "markdown":
        return _render_markdown(suite)
    if format == "json":
        return _render_json(suite)
    raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def load_suite(data: bytes | str) -> SuiteResult:
    """Inverse of the JSON rendering."""
    doc = json.loads(data)
    results = tuple(
        AssociationResult(
            test_id=entry["test_id"],
            model_id=entry["model_id"],
            level=EncodingLevel(entry["level"]),
            statistic=entry["statistic"],
            effect_size=entry["effect_size"],
            p_value=entry["p_value"],
            method=entry["method"],
            n_samples=entry["n_samples"],
            seed=entry.get("seed"),
            significant=entry["significant"],
        )
        for entry in doc.get("results", [])
    )
    return SuiteResult(results, doc.get("categories", {}))
