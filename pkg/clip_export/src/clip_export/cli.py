"""clip-export command line: text and visual subcommands."""

from __future__ import annotations

import argparse
import sys

from .encoders import DEFAULT_CHECKPOINT, load_encoder
from .exporter import (ExportError, export_text_classifier,
                       export_visual_features, read_class_names)
from .pcem import PcemError
from .pgm import PgmError
from .templates import DEFAULT_ZERO_SHOT, PLACEHOLDER, TemplateError


def _add_encoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoder", default=DEFAULT_CHECKPOINT,
                   help="checkpoint name for transformers, or 'stub' for "
                        "the deterministic weight-free encoder "
                        f"(default: {DEFAULT_CHECKPOINT})")
    p.add_argument("--dim", type=int, default=512,
                   help="feature width, stub encoder only (default 512)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clip-export",
        description="materialize text and image embeddings as .pcem stores")
    sub = parser.add_subparsers(dest="command", required=True)

    text = sub.add_parser(
        "text", help="encode class names through a prompt template")
    text.add_argument("--classes", required=True,
                      help="text file, one class name per line")
    text.add_argument("--template", default=DEFAULT_ZERO_SHOT,
                      help=f"prompt with a {PLACEHOLDER} slot "
                           f"(default: {DEFAULT_ZERO_SHOT!r})")
    text.add_argument("--out", required=True, help="output .pcem path")
    _add_encoder_flags(text)

    visual = sub.add_parser(
        "visual", help="encode a directory of <id>_<view>.pgm depth maps")
    visual.add_argument("--dir", required=True, help="directory of PGM files")
    visual.add_argument("--out", required=True, help="output .pcem path")
    visual.add_argument("--view-names",
                        help="comma-separated view names; needed to split "
                             "file names whose views contain underscores")
    _add_encoder_flags(visual)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        encoder = load_encoder(args.encoder, args.dim)
        if args.command == "text":
            names = read_class_names(args.classes)
            dim = export_text_classifier(names, args.template, encoder,
                                         args.out)
            print(f"wrote {len(names)} classes of width {dim} to {args.out}")
        else:
            views = (args.view_names.split(",") if args.view_names else None)
            count, dim = export_visual_features(args.dir, encoder, args.out,
                                                view_names=views)
            print(f"wrote {count} rows of width {dim} to {args.out}")
    except TemplateError as exc:
        parser.error(str(exc))        # argparse usage error, exit code 2
    except (ExportError, PcemError, PgmError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
