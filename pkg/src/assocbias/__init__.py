"""Measure social and intersectional bias in word, sentence, and
contextual-word embeddings via association tests, and profile gender
skew in corpora via pronoun/occupation co-occurrence counts."""

from .assoc import (
    DEFAULT_SEED,
    PermutationConfig,
    association_diff,
    effect_size,
    p_value_exact,
    p_value_sampled,
    run_test,
    test_statistic,
)
from .core import (
    AssociationResult,
    EncodingLevel,
    ItemSet,
    TestSpecification,
    TextItem,
    cosine,
    mean_vector,
)
from .corpuscount import (
    CooccurrenceReport,
    OccupationLexicon,
    PronounLexicon,
    classify_sentence,
    merge,
    scan,
    scan_path,
    scan_path_chunked,
)
from .embedstore import (
    CBOW_MODEL_ID,
    ContextualStore,
    EmbeddingRecord,
    WordStore,
    cbow_encode,
    load_contextual,
    load_word_vectors,
    resolve,
    serialize_contextual,
)
from .errors import AssocBiasError
from .report import OverlapMark, SuiteResult, aggregate_meta, classify_overlap, load_suite, render
from .testspec import (
    BLEACHED_ATTRIBUTE_TEMPLATES,
    BLEACHED_PERSON_TEMPLATES,
    TemplateSet,
    TestNameInfo,
    compose_intersectional,
    compose_matched_test,
    expand_templates,
    load_spec,
    parse_test_name,
    serialize_spec,
)

__version__ = "0.1.0"
