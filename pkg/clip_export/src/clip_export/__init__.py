"""Materialize vision-language embeddings as .pcem stores.

Two one-shot operations: encode class names through a prompt template
into a text classifier store, and encode directories of projected depth
maps into a visual feature store. Both outputs feed the pointview
toolkit, which this package talks to only through files; nothing here
imports it.
"""

from .encoders import StubEncoder, load_encoder
from .exporter import ExportError, export_text_classifier, export_visual_features
from .pcem import read_pcem, write_pcem
from .pgm import PgmError, read_pgm
from .templates import (DEFAULT_FEW_SHOT, DEFAULT_ZERO_SHOT, TEMPLATES,
                        TemplateError, fill_template)

__all__ = [
    "DEFAULT_FEW_SHOT",
    "DEFAULT_ZERO_SHOT",
    "ExportError",
    "PgmError",
    "StubEncoder",
    "TEMPLATES",
    "TemplateError",
    "export_text_classifier",
    "export_visual_features",
    "fill_template",
    "load_encoder",
    "read_pcem",
    "read_pgm",
    "write_pcem",
]
