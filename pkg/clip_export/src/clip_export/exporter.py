"""The two export operations: text classifier and visual features."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .pcem import write_pcem
from .pgm import PgmError, read_pgm
from .templates import fill_template


class ExportError(ValueError):
    """Inputs leave nothing valid to export."""


def read_class_names(path: str | Path) -> list[str]:
    """One class name per line; blank lines ignored."""
    names = [line.strip() for line in Path(path).read_text().splitlines()
             if line.strip()]
    if not names:
        raise ExportError(f"no class names in {path}")
    return names


def export_text_classifier(class_names: list[str], template: str,
                           encoder, out: str | Path) -> int:
    """Encode one filled prompt per class; rows keyed by class name.

    Row order follows the class list. Returns the embedding width.
    Raises TemplateError if the template has no [CLASS] slot.
    """
    prompts = [fill_template(template, name) for name in class_names]
    matrix = encoder.encode_text(prompts)
    return write_pcem(list(zip(class_names, matrix)), out)


def split_map_name(stem: str, view_names: list[str] | None = None
                   ) -> tuple[str, str] | None:
    """Turn a "<id>_<view>" file stem into (id, view).

    With an explicit view list the longest matching suffix wins, which
    disambiguates views that contain underscores themselves. Otherwise
    the split happens at the last underscore. Returns None when the stem
    cannot be split.
    """
    if view_names:
        for view in sorted(view_names, key=len, reverse=True):
            if stem.endswith("_" + view):
                return stem[: -len(view) - 1], view
        return None
    sample_id, sep, view = stem.rpartition("_")
    if not sep or not sample_id or not view:
        return None
    return sample_id, view


def export_visual_features(map_dir: str | Path, encoder, out: str | Path,
                           view_names: list[str] | None = None,
                           log=sys.stderr) -> tuple[int, int]:
    """Encode every "<id>_<view>.pgm" under map_dir; keys become "<id>/<view>".

    Maps are replicated from one channel to three before encoding. Files
    that fail to parse are skipped with a warning on log; if nothing in a
    non-empty directory survives, that is an error. Rows follow sorted
    file name order so re-exports are stable. Returns (rows, width).
    """
    paths = sorted(Path(map_dir).glob("*.pgm"))
    if not paths:
        raise ExportError(f"no .pgm files under {map_dir}")
    rows = []
    for path in paths:
        parsed = split_map_name(path.stem, view_names)
        if parsed is None:
            print(f"warning: cannot split {path.name} into id and view, "
                  f"skipping", file=log)
            continue
        try:
            gray = read_pgm(path)
        except (PgmError, OSError) as exc:
            print(f"warning: skipping {path.name}: {exc}", file=log)
            continue
        image = np.repeat(gray[:, :, None], 3, axis=2)
        rows.append((f"{parsed[0]}/{parsed[1]}", encoder.encode_image(image)))
    if not rows:
        raise ExportError(f"none of the {len(paths)} .pgm files under "
                          f"{map_dir} could be exported")
    dim = write_pcem(rows, out)
    return len(rows), dim
