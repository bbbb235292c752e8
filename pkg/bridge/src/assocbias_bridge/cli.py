"""Exporter CLI: `assocbias-bridge export --models m1,m2 --specs … --out file.jsonl`."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .backends import ModelLoadError, load_backend
from .export import export_batch, load_spec_items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assocbias-bridge",
        description="Export sentence/cword encodings from transformer models "
                    "to interchange JSONL.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    exp = sub.add_parser("export", help="encode spec items with one or more models")
    exp.add_argument("--models", required=True,
                     help="comma-separated model ids or local checkpoint paths")
    exp.add_argument("--specs", nargs="+", required=True, metavar="PATH")
    exp.add_argument("--out", required=True, metavar="PATH")
    exp.add_argument("--device", default="cpu")
    exp.add_argument("--manifest", metavar="PATH",
                     help="write failed items as JSONL here (default: stderr)")
    return parser


def main(argv: Optional[Sequence[str]] = None, stderr=None) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    args = build_parser().parse_args(argv)
    try:
        backends = [
            load_backend(model_id.strip(), device=args.device)
            for model_id in args.models.split(",") if model_id.strip()
        ]
        if not backends:
            raise ModelLoadError("no model ids given")
        specs = [
            load_spec_items(Path(p).read_bytes(), spec_id=Path(p).stem)
            for p in args.specs
        ]
    except (ModelLoadError, OSError, ValueError) as e:
        print(f"error: {e}", file=stderr)
        return 1
    result = export_batch(specs, backends, out_path=args.out)
    if result.failures:
        lines = [json.dumps(f.to_dict(), ensure_ascii=False) for f in result.failures]
        if args.manifest:
            Path(args.manifest).write_text("\n".join(lines) + "\n", encoding="utf-8")
        else:
            for line in lines:
                print(line, file=stderr)
        print(f"exported {result.n_records} records; {len(result.failures)} failed",
              file=stderr)
        return 1
    print(f"exported {result.n_records} records to {args.out}", file=stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
