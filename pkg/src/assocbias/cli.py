"""Command-line entry point.

Subcommands: run (association-test suites), count (corpus profiling),
expand (template expansion), validate (spec files), report (re-render a
JSON suite), segment (approximate sentence splitter convenience).

Exit codes: 0 full success, 2 when tests were skipped for missing
embeddings (suites commonly mix levels across partial stores), 1 on
hard errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import gzip
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import corpuscount, embedstore, report, testspec
from .assoc import DEFAULT_SEED, PermutationConfig, run_test
from .core import EncodingLevel, TestSpecification
from .errors import AssocBiasError, MissingEmbedding
from .embedstore import CBOW_MODEL_ID

THREADS_ENV = "ASSOC_BIAS_THREADS"
CI_ENV = "ASSOC_BIAS_CI"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SKIPPED = 2


def _workers() -> int:
    requested = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            requested = min(requested, max(1, int(cap)))
        except ValueError:
            raise AssocBiasError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return requested


@dataclass(frozen=True)
class RunConfig:
    """Everything cmd_run needs, resolved from flags and environment."""

    spec_paths: tuple[str, ...]
    word_vectors: Optional[str]
    contextual: tuple[str, ...]
    models: Optional[tuple[str, ...]]
    level: Optional[EncodingLevel]
    permutation: PermutationConfig
    balance: str
    format: str
    out: Optional[str]
    workers: int = 1


def _expand_globs(patterns: Sequence[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        hits = sorted(glob.glob(pattern))
        if not hits:
            if os.path.exists(pattern):
                hits = [pattern]
            else:
                raise AssocBiasError(f"no spec files match {pattern!r}")
        paths.extend(hits)
    # keep order stable and drop duplicates
    seen, unique = set(), []
    for p in paths:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def _load_specs(paths: Sequence[str], balance: str) -> list[TestSpecification]:
    specs = []
    for path in paths:
        data = Path(path).read_bytes()
        try:
            specs.append(testspec.load_spec(data, spec_id=Path(path).stem, balance=balance))
        except AssocBiasError as e:
            raise AssocBiasError(f"{path}: {e}") from e
    return specs


def _candidate_levels(spec: TestSpecification, wanted: Optional[EncodingLevel]):
    levels = [spec.level]
    if spec.level is EncodingLevel.SENTENCE and all(
        i.focus_span is not None for i in spec.targ1.items + spec.targ2.items
    ):
        levels.append(EncodingLevel.CWORD)
    if wanted is not None:
        levels = [lv for lv in levels if lv is wanted]
    return levels


def cmd_run(config: RunConfig, stdout, stderr) -> int:
    word_store = None
    if config.word_vectors:
        with open(config.word_vectors, "r", encoding="utf-8") as fh:
            word_store = embedstore.load_word_vectors(fh)
    contextual = embedstore.ContextualStore()
    for path in config.contextual:
        with open(path, "r", encoding="utf-8") as fh:
            for rec in embedstore.load_contextual(fh).records():
                contextual.add(rec)

    specs = _load_specs(_expand_globs(config.spec_paths), config.balance)

    tasks = []  # (spec-at-level, model_id)
    no_store_skips = []
    for spec in specs:
        for level in _candidate_levels(spec, config.level):
            eff = spec if level is spec.level else dataclasses.replace(spec, level=level)
            models: list[str] = []
            if level in (EncodingLevel.WORD, EncodingLevel.SENTENCE) and word_store is not None:
                models.append(CBOW_MODEL_ID)
            if level in (EncodingLevel.SENTENCE, EncodingLevel.CWORD):
                models.extend(m for m in contextual.model_ids() if m != CBOW_MODEL_ID)
            if config.models is not None:
                models = [m for m in models if m in config.models]
            if not models:
                no_store_skips.append(
                    f"skipped {spec.id} [{level.value}]: no store provides this level"
                )
                continue
            tasks.extend((eff, model) for model in models)

    def execute(task):
        eff, model = task
        try:
            mapping = embedstore.resolve(
                eff, word_store=word_store, contextual_store=contextual, model_id=model
            )
        except MissingEmbedding as e:
            return None, f"skipped {eff.id} [{eff.level.value}] x {model}: {e}"
        result = run_test(eff, mapping, config.permutation, model_id=model,
                          workers=config.workers)
        return result, None

    if config.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(execute, tasks))
    else:
        outcomes = [execute(t) for t in tasks]

    results = [r for r, _ in outcomes if r is not None]
    skips = no_store_skips + [msg for _, msg in outcomes if msg is not None]
    for msg in skips:
        print(msg, file=stderr)

    categories = {spec.id: spec.category for spec in specs}
    suite = report.SuiteResult(tuple(results), categories)
    _write(report.render(suite, config.format), config.out, stdout)
    return EXIT_SKIPPED if skips else EXIT_OK


def cmd_count(args, stdout, stderr) -> int:
    pron = corpuscount.PronounLexicon()
    if args.pronouns:
        pron = corpuscount.load_pronoun_lexicon(Path(args.pronouns).read_bytes())
    occ = corpuscount.OccupationLexicon()
    if args.occupations:
        occ = corpuscount.load_occupation_lexicon(Path(args.occupations).read_bytes())
    workers = _workers()
    merged = None
    for path in args.corpus:
        part = corpuscount.scan_path_chunked(
            path, pron, occ, mode=args.mode, chunks=max(8, 4 * workers), workers=workers
        )
        merged = part if merged is None else corpuscount.merge(merged, part)
    json_payload = (json.dumps(merged.to_dict(), ensure_ascii=False, indent=2) + "\n").encode()
    if args.out:
        # machine-readable artifact to the file, human table to stdout
        Path(args.out).write_bytes(json_payload)
        stdout.write(corpuscount.render_table(merged))
    elif args.format == "json":
        stdout.write(json_payload.decode("utf-8"))
    else:
        stdout.write(corpuscount.render_table(merged))
    return EXIT_OK


def cmd_expand(args, stdout, stderr) -> int:
    ts = testspec.load_templates(Path(args.templates).read_bytes())
    doc = json.loads(Path(args.fillers).read_bytes())
    fillers = doc.get("fillers") if isinstance(doc, dict) else doc
    if not isinstance(fillers, list) or not all(isinstance(f, str) for f in fillers):
        raise AssocBiasError(
            f"{args.fillers}: fillers must be a JSON array of strings "
            "(or an object with a 'fillers' array)"
        )
    items = testspec.expand_templates(ts, fillers)
    fragment = {
        "category": args.label or ts.slot_kind,
        "examples": [i.text for i in items],
        "focus": [list(i.focus_span) for i in items],
    }
    _write((json.dumps(fragment, ensure_ascii=False, indent=2) + "\n").encode(),
           args.out, stdout)
    return EXIT_OK


def cmd_validate(args, stdout, stderr) -> int:
    ok = True
    for path in _expand_globs(args.specs):
        try:
            testspec.load_spec(Path(path).read_bytes(), spec_id=Path(path).stem,
                               balance=args.balance)
            print(f"OK {path}", file=stdout)
        except AssocBiasError as e:
            ok = False
            print(f"ERROR {path}: {e}", file=stdout)
    return EXIT_OK if ok else EXIT_ERROR


def cmd_report(args, stdout, stderr) -> int:
    suite = report.load_suite(Path(args.suite).read_bytes())
    _write(report.render(suite, args.format), args.out, stdout)
    return EXIT_OK


_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def cmd_segment(args, stdout, stderr) -> int:
    """Approximate sentence splitter: breaks after ., ! or ?."""
    out_lines = []
    for path in args.input:
        opener = gzip.open if Path(path).read_bytes()[:2] == corpuscount.GZIP_MAGIC else open
        with opener(path, "rt", encoding="utf-8") as fh:
            text = fh.read()
        for piece in _SENTENCE_BREAK.split(text):
            piece = " ".join(piece.split())
            if piece:
                out_lines.append(piece)
    _write(("\n".join(out_lines) + "\n").encode() if out_lines else b"", args.out, stdout)
    return EXIT_OK


def _write(payload: bytes, out: Optional[str], stdout) -> None:
    if out:
        Path(out).write_bytes(payload)
    else:
        stdout.write(payload.decode("utf-8"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assocbias",
        description="Association tests and corpus profiling for embedding bias measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run association-test suites against embedding stores")
    run.add_argument("--specs", nargs="+", required=True, metavar="PATH",
                     help="spec files or globs")
    run.add_argument("--word-vectors", metavar="PATH",
                     help="context-free word-vector file (model id 'cbow')")
    run.add_argument("--contextual", action="append", default=[], metavar="PATH",
                     help="contextual interchange JSONL (repeatable)")
    run.add_argument("--model", action="append", default=None,
                     help="only run these model ids (repeatable)")
    run.add_argument("--level", choices=[lv.value for lv in EncodingLevel],
                     help="only run at this encoding level")
    run.add_argument("--alpha", type=float, default=0.01)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--samples", type=int, default=100_000)
    run.add_argument("--exact-limit", type=int, default=24)
    run.add_argument("--std", choices=["population", "sample"], default="population")
    run.add_argument("--balance", choices=["error", "truncate"], default="error")
    run.add_argument("--format", choices=list(report.FORMATS), default="markdown")
    run.add_argument("--out", metavar="PATH")

    count = sub.add_parser("count", help="profile pronoun/occupation co-occurrence")
    count.add_argument("corpus", nargs="+", metavar="PATH",
                       help="one sentence per line; gzip detected by magic bytes")
    count.add_argument("--pronouns", metavar="PATH", help="pronoun lexicon JSON")
    count.add_argument("--occupations", metavar="PATH", help="occupation lexicon JSON")
    count.add_argument("--mode", choices=list(corpuscount.MODES), default="independent")
    count.add_argument("--format", choices=["table", "json"], default="table",
                       help="stdout format when --out is not given")
    count.add_argument("--out", metavar="PATH",
                       help="write the JSON report here (the table still goes to stdout)")

    expand = sub.add_parser("expand", help="expand slot templates into sentence items")
    expand.add_argument("--templates", required=True, metavar="PATH")
    expand.add_argument("--fillers", required=True, metavar="PATH")
    expand.add_argument("--label", help="category label for the emitted fragment")
    expand.add_argument("--out", metavar="PATH")

    validate = sub.add_parser("validate", help="check spec files")
    validate.add_argument("specs", nargs="+", metavar="PATH")
    validate.add_argument("--balance", choices=["error", "truncate"], default="error")

    rep = sub.add_parser("report", help="re-render a JSON suite")
    rep.add_argument("suite", metavar="PATH")
    rep.add_argument("--format", choices=list(report.FORMATS), default="markdown")
    rep.add_argument("--out", metavar="PATH")

    seg = sub.add_parser(
        "segment",
        help="APPROXIMATE sentence splitter (breaks on . ! ?); prefer properly "
             "segmented input for real profiling",
    )
    seg.add_argument("input", nargs="+", metavar="PATH")
    seg.add_argument("--out", metavar="PATH")

    return parser


def _run_config(args) -> RunConfig:
    seed = args.seed
    if seed is None:
        if os.environ.get(CI_ENV):
            raise AssocBiasError(f"{CI_ENV} is set: pass --seed explicitly")
        seed = DEFAULT_SEED
    permutation = PermutationConfig(
        exact_limit=args.exact_limit,
        n_samples=args.samples,
        seed=seed,
        alpha=args.alpha,
        std_mode=args.std,
    )
    return RunConfig(
        spec_paths=tuple(args.specs),
        word_vectors=args.word_vectors,
        contextual=tuple(args.contextual),
        models=tuple(args.model) if args.model else None,
        level=EncodingLevel(args.level) if args.level else None,
        permutation=permutation,
        balance=args.balance,
        format=args.format,
        out=args.out,
        workers=_workers(),
    )


def main(argv: Optional[Sequence[str]] = None,
         stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_run_config(args), stdout, stderr)
        if args.command == "count":
            return cmd_count(args, stdout, stderr)
        if args.command == "expand":
            return cmd_expand(args, stdout, stderr)
        if args.command == "validate":
            return cmd_validate(args, stdout, stderr)
        if args.command == "report":
            return cmd_report(args, stdout, stderr)
        if args.command == "segment":
            return cmd_segment(args, stdout, stderr)
        raise AssertionError(f"unhandled command {args.command}")
    except (AssocBiasError, OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
