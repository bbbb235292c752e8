"""Loading, validating, and constructing test specifications.

Covers the JSON spec-file format, the test-id naming convention, slot
template expansion for bleached/unbleached sentence batteries, and the
programmatic recipes that pair existing name lists with existing
attribute lists (matched and intersectional test families).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .core import CATEGORIES, EncodingLevel, ItemSet, TestSpecification, TextItem, nfc
from .errors import (
    BadTemplate,
    EmptyInput,
    ParseError,
    SchemaError,
    UnbalancedTargets,
    UnequalTargetSizes,
    UnknownVariant,
    UnrecognizedName,
)

SLOT = "[X]"
ARTICLE_SLOT = "a/an [X]"
SLOT_KINDS = ("name", "attribute", "group_term")

#: Words whose article defies the first-letter vowel rule.
DEFAULT_ARTICLE_EXCEPTIONS = frozenset(
    {"honest", "hour", "heir", "unicorn", "user", "european"}
)

FAMILIES = (
    "caliskan",
    "additional",
    "intersectional",
    "occupation",
    "gender_double_bind",
    "race_double_bind",
    "angry_black_woman",
)

SET_KEYS = ("targ1", "targ2", "attr1", "attr2")


@dataclass(frozen=True)
class TemplateSet:
    """Sentence templates with a single fill slot.

    Each template contains the slot token ``[X]`` exactly once and ends
    with sentence punctuation. An indefinite-article slot is written
    ``a/an [X]`` and resolves to "a" or "an" against the filler.
    """

    templates: tuple[str, ...]
    slot_kind: str = "name"

    def __post_init__(self) -> None:
        object.__setattr__(self, "templates", tuple(self.templates))
        if self.slot_kind not in SLOT_KINDS:
            raise SchemaError(f"slot_kind must be one of {SLOT_KINDS}, got {self.slot_kind!r}")
        if not self.templates:
            raise EmptyInput("template set is empty")
        for t in self.templates:
            slots = t.count(SLOT)
            if slots != 1:
                raise BadTemplate(f"template {t!r} has {slots} slots, expected exactly one")
            if not t.rstrip() or t.rstrip()[-1] not in ".!?":
                raise BadTemplate(f"template {t!r} does not end with sentence punctuation")


# Semantically bleached carrier sentences: the filler is the only
# contentful element, so the encoding reflects the filler rather than
# surrounding context.
BLEACHED_PERSON_TEMPLATES = TemplateSet(
    (
        "This is [X].",
        "That is [X].",
        "There is [X].",
        "Here is [X].",
        "[X] is here.",
        "[X] is there.",
        "[X] is a person.",
        "The person's name is [X].",
    ),
    slot_kind="name",
)

BLEACHED_ATTRIBUTE_TEMPLATES = TemplateSet(
    ("This is [X].", "That is [X].", "They are [X]."),
    slot_kind="attribute",
)

# Unbleached double-bind carriers: success framing around the filler.
UNBLEACHED_COMPETENCE_TARGET_TEMPLATES = TemplateSet(
    ("[X] is an engineer.",), slot_kind="name"
)
UNBLEACHED_LIKABILITY_TARGET_TEMPLATES = TemplateSet(
    ("[X] is an engineer with superior technical skills.",), slot_kind="name"
)
UNBLEACHED_ATTRIBUTE_TEMPLATES = TemplateSet(
    ("The engineer is [X].",), slot_kind="attribute"
)


@dataclass(frozen=True)
class TestNameInfo:
    """Decomposition of a conventional test id."""

    level: EncodingLevel
    family: str
    uses_terms_variant: bool = False
    index: Optional[str] = None


_BODY_PATTERNS = (
    (re.compile(r"(10|[1-9])(b?)"), "caliskan"),
    (re.compile(r"\+(1[1-3])(b?)"), "additional"),
    (re.compile(r"\+i([1-5])"), "intersectional"),
    (re.compile(r"\+occ"), "occupation"),
    (re.compile(r"_r_hdb(?:_([A-Za-z0-9_]+))?"), "race_double_bind"),
    (re.compile(r"_hdb(?:_([A-Za-z0-9_]+))?"), "gender_double_bind"),
    (re.compile(r"_angry(?:_([A-Za-z0-9_]+))?"), "angry_black_woman"),
)


def parse_test_name(test_id: str) -> TestNameInfo:
    """Classify a test id by the naming convention.

    ``weat…`` ids are word level and ``sent-weat…`` sentence level; the
    body selects the family: a 1-10 index (optionally suffixed ``b`` for
    the group-terms variant), ``+11``..``+13``, ``+i1``..``+i5``,
    ``+occ``, or a ``_hdb`` / ``_r_hdb`` / ``_angry`` prefix with an
    optional qualifier.
    """
    if test_id.startswith("sent-weat"):
        level, body = EncodingLevel.SENTENCE, test_id[len("sent-weat"):]
    elif test_id.startswith("weat"):
        level, body = EncodingLevel.WORD, test_id[len("weat"):]
    else:
        raise UnrecognizedName(f"{test_id!r} has neither the word nor the sentence prefix")
    for pattern, family in _BODY_PATTERNS:
        m = pattern.fullmatch(body)
        if not m:
            continue
        groups = m.groups()
        if family in ("caliskan", "additional"):
            return TestNameInfo(level, family, uses_terms_variant=bool(groups[1]), index=groups[0])
        if family in ("intersectional",):
            return TestNameInfo(level, family, index=groups[0])
        if family == "occupation":
            return TestNameInfo(level, family)
        return TestNameInfo(level, family, index=groups[0])
    raise UnrecognizedName(f"{test_id!r} does not follow the naming convention")


def format_test_name(info: TestNameInfo) -> str:
    """Inverse of parse_test_name."""
    if info.level is EncodingLevel.WORD:
        prefix = "weat"
    elif info.level is EncodingLevel.SENTENCE:
        prefix = "sent-weat"
    else:
        raise ValueError("test ids exist only at word and sentence level")
    b = "b" if info.uses_terms_variant else ""
    qualifier = f"_{info.index}" if info.index else ""
    if info.family == "caliskan":
        return f"{prefix}{info.index}{b}"
    if info.family == "additional":
        return f"{prefix}+{info.index}{b}"
    if info.family == "intersectional":
        return f"{prefix}+i{info.index}"
    if info.family == "occupation":
        return f"{prefix}+occ"
    if info.family == "gender_double_bind":
        return f"{prefix}_hdb{qualifier}"
    if info.family == "race_double_bind":
        return f"{prefix}_r_hdb{qualifier}"
    if info.family == "angry_black_woman":
        return f"{prefix}_angry{qualifier}"
    raise ValueError(f"unknown family {info.family!r}")


def default_category(info: TestNameInfo) -> str:
    """Conventional category of a test family (caliskan splits by index)."""
    if info.family == "caliskan":
        idx = int(info.index)
        if idx <= 2:
            return "neutral"
        if idx <= 5:
            return "race"
        if idx <= 8:
            return "gender"
        return "other"
    if info.family == "additional":
        return "gender" if info.index == "11" else "race"
    if info.family in ("occupation", "gender_double_bind"):
        return "gender"
    if info.family == "race_double_bind":
        return "race"
    return "intersectional"  # intersectional pairings and the ABW stereotype


def category_for_id(test_id: str) -> str:
    try:
        return default_category(parse_test_name(test_id))
    except UnrecognizedName:
        return "other"


# --- template expansion ------------------------------------------------------

def _indefinite_article(filler: str, exceptions: frozenset[str]) -> str:
    head = filler.split()[0] if filler.split() else ""
    if not head:
        raise EmptyInput("cannot choose an article for an empty filler")
    vowel = head[0].lower() in "aeiou"
    if head.lower().strip(".,!?;:\"'") in exceptions:
        vowel = not vowel
    return "an" if vowel else "a"


def expand_templates(
    ts: TemplateSet,
    fillers: Sequence[str],
    article_exceptions: Optional[Iterable[str]] = None,
) -> list[TextItem]:
    """Fill every template with every filler, in filler-major order.

    Each produced item carries a focus span covering exactly the inserted
    filler, so the expansion is directly usable for cword-level tests.
    """
    if not fillers:
        raise EmptyInput("no fillers to expand")
    exceptions = (
        DEFAULT_ARTICLE_EXCEPTIONS
        if article_exceptions is None
        else frozenset(e.lower() for e in article_exceptions)
    )
    items: list[TextItem] = []
    for filler in fillers:
        f = nfc(filler)
        for template in ts.templates:
            t = nfc(template)
            if ARTICLE_SLOT in t:
                pos = t.index(ARTICLE_SLOT)
                prefix = t[:pos] + _indefinite_article(f, exceptions) + " "
                suffix = t[pos + len(ARTICLE_SLOT):]
            else:
                pos = t.index(SLOT)
                prefix = t[:pos]
                suffix = t[pos + len(SLOT):]
            start = len(prefix)
            items.append(TextItem(prefix + f + suffix, (start, start + len(f))))
    return items


def load_templates(data: bytes | str) -> TemplateSet:
    """Parse a template file: JSON {"slot_kind": …, "templates": […]}."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from e
    if not isinstance(doc, dict) or "templates" not in doc:
        raise SchemaError("template file must be an object with a 'templates' list")
    templates = doc["templates"]
    if not isinstance(templates, list) or not all(isinstance(t, str) for t in templates):
        raise SchemaError("'templates' must be a list of strings")
    return TemplateSet(tuple(templates), slot_kind=doc.get("slot_kind", "name"))


# --- spec files --------------------------------------------------------------

def _item_set(key: str, entry, spans) -> ItemSet:
    if not isinstance(entry, dict):
        raise SchemaError(f"{key!r} must be an object with 'category' and 'examples'")
    examples = entry.get("examples")
    if not isinstance(examples, list) or len(examples) == 0:
        raise SchemaError(f"{key!r} has no examples")
    if not all(isinstance(e, str) for e in examples):
        raise SchemaError(f"{key!r} examples must all be strings")
    if spans is not None:
        if not isinstance(spans, list) or len(spans) != len(examples):
            raise SchemaError(
                f"focus spans for {key!r} must align one-to-one with its examples"
            )
    else:
        spans = [None] * len(examples)
    items = []
    for text, span in zip(examples, spans):
        if span is not None:
            if (not isinstance(span, (list, tuple))) or len(span) != 2:
                raise SchemaError(f"focus span {span!r} in {key!r} is not a [start, end] pair")
            span = (int(span[0]), int(span[1]))
        try:
            items.append(TextItem(text, span))
        except ValueError as e:
            raise SchemaError(f"{key!r}: {e}") from e
    try:
        return ItemSet(str(entry.get("category", key)), tuple(items))
    except ValueError as e:
        raise SchemaError(f"{key!r}: {e}") from e


def load_spec(
    data: bytes | str,
    spec_id: Optional[str] = None,
    balance: str = "error",
) -> TestSpecification:
    """Parse and validate a spec file.

    ``balance`` controls unequal target sets: "error" rejects them,
    "truncate" deterministically drops tail items from the longer list
    (silent truncation would change test semantics, so it is opt-in).
    """
    if balance not in ("error", "truncate"):
        raise ValueError("balance must be 'error' or 'truncate'")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"{e.msg} (column {e.colno})", line=e.lineno) from e
    if not isinstance(doc, dict):
        raise SchemaError("spec file must be a JSON object")
    for key in SET_KEYS:
        if key not in doc:
            raise SchemaError(f"missing key {key!r}")
    focus = doc.get("focus") or {}
    if not isinstance(focus, dict):
        raise SchemaError("'focus' must map set names to span lists")
    try:
        level = EncodingLevel(doc.get("level", "word"))
    except ValueError:
        raise SchemaError(f"unknown level {doc.get('level')!r}") from None

    sets = {key: _item_set(key, doc[key], focus.get(key)) for key in SET_KEYS}

    t1, t2 = sets["targ1"], sets["targ2"]
    if len(t1) != len(t2):
        if balance == "error":
            raise UnbalancedTargets(
                f"targ1 has {len(t1)} examples but targ2 has {len(t2)}"
            )
        keep = min(len(t1), len(t2))
        t1 = ItemSet(t1.category_label, t1.items[:keep])
        t2 = ItemSet(t2.category_label, t2.items[:keep])

    test_id = str(doc.get("id") or spec_id or "")
    category = doc.get("category")
    if category is None:
        category = category_for_id(test_id)
    elif category not in CATEGORIES:
        raise SchemaError(f"unknown category {category!r}; expected one of {CATEGORIES}")

    spec = TestSpecification(test_id, level, category, t1, t2, sets["attr1"], sets["attr2"])
    try:
        spec.validate()
    except ValueError as e:
        raise SchemaError(str(e)) from e
    return spec


def serialize_spec(spec: TestSpecification) -> bytes:
    """Canonical JSON for a spec; load_spec(serialize_spec(s)) == s."""
    doc: dict = {"id": spec.id, "level": spec.level.value, "category": spec.category}
    focus: dict = {}
    for key in SET_KEYS:
        item_set: ItemSet = getattr(spec, key)
        doc[key] = {
            "category": item_set.category_label,
            "examples": [i.text for i in item_set.items],
        }
        if any(i.focus_span is not None for i in item_set.items):
            focus[key] = [
                list(i.focus_span) if i.focus_span is not None else None
                for i in item_set.items
            ]
    if focus:
        doc["focus"] = focus
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# --- programmatic composition ------------------------------------------------

def _as_items(values: Sequence[str | TextItem]) -> tuple[TextItem, ...]:
    return tuple(v if isinstance(v, TextItem) else TextItem(v) for v in values)


def compose_matched_test(
    test_id: str,
    targets: tuple[Sequence[str | TextItem], Sequence[str | TextItem]],
    attributes: tuple[Sequence[str | TextItem], Sequence[str | TextItem]],
    level: EncodingLevel = EncodingLevel.WORD,
    category: Optional[str] = None,
    target_labels: tuple[str, str] = ("targ1", "targ2"),
    attribute_labels: tuple[str, str] = ("attr1", "attr2"),
) -> TestSpecification:
    """Pair existing target name lists with existing attribute lists.

    This is the recipe behind the matched test family: names from one
    test combined with attribute terms from another.
    """
    xs, ys = targets
    if len(xs) != len(ys):
        raise UnequalTargetSizes(f"{test_id}: {len(xs)} vs {len(ys)} target names")
    spec = TestSpecification(
        test_id,
        level,
        category if category is not None else category_for_id(test_id),
        ItemSet(target_labels[0], _as_items(xs)),
        ItemSet(target_labels[1], _as_items(ys)),
        ItemSet(attribute_labels[0], _as_items(attributes[0])),
        ItemSet(attribute_labels[1], _as_items(attributes[1])),
    )
    spec.validate()
    return spec


GROUP_EA_MALE = "EA_male"
GROUP_EA_FEMALE = "EA_female"
GROUP_AA_MALE = "AA_male"
GROUP_AA_FEMALE = "AA_female"

#: Target pairing per intersectional variant. Variants 1, 2 and 5 cover
#: the doubly-disadvantaged group directly; 3, 4 and 5 anchor at the most
#: privileged group, isolating the race-only / gender-only / combined axes.
INTERSECTIONAL_PAIRINGS: Mapping[int, tuple[str, str]] = {
    1: (GROUP_EA_FEMALE, GROUP_AA_FEMALE),
    2: (GROUP_AA_MALE, GROUP_AA_FEMALE),
    3: (GROUP_EA_MALE, GROUP_AA_MALE),
    4: (GROUP_EA_MALE, GROUP_EA_FEMALE),
    5: (GROUP_EA_MALE, GROUP_AA_FEMALE),
}


def compose_intersectional(
    variant: int,
    groups: Mapping[str, Sequence[str | TextItem]],
    attributes: tuple[Sequence[str | TextItem], Sequence[str | TextItem]],
    level: EncodingLevel = EncodingLevel.WORD,
    test_id: Optional[str] = None,
    attribute_labels: tuple[str, str] = ("pleasant", "unpleasant"),
) -> TestSpecification:
    """Build one of the five intersectional pairings over name groups."""
    if variant not in INTERSECTIONAL_PAIRINGS:
        raise UnknownVariant(f"variant must be 1..5, got {variant}")
    g1, g2 = INTERSECTIONAL_PAIRINGS[variant]
    for g in (g1, g2):
        if g not in groups:
            raise SchemaError(f"groups is missing the {g!r} name list")
    if test_id is None:
        prefix = "weat" if level is EncodingLevel.WORD else "sent-weat"
        test_id = f"{prefix}+i{variant}"
    return compose_matched_test(
        test_id,
        (groups[g1], groups[g2]),
        attributes,
        level=level,
        category="intersectional",
        target_labels=(g1, g2),
        attribute_labels=attribute_labels,
    )
