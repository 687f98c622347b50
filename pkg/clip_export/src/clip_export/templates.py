"""Prompt templates shipped as data.

Every template carries a "[CLASS]" slot that the class name drops into.
The two defaults reflect which wording works best for zero-shot scoring
and for few-shot training respectively.
"""

PLACEHOLDER = "[CLASS]"

TEMPLATES: tuple[str, ...] = (
    "a photo of a [CLASS].",
    "a point cloud photo of a [CLASS].",
    "point cloud of a [CLASS].",
    "point cloud of a big [CLASS].",
    "point cloud depth map of a [CLASS].",
)

DEFAULT_ZERO_SHOT = "point cloud depth map of a [CLASS]."
DEFAULT_FEW_SHOT = "point cloud of a big [CLASS]."


class TemplateError(ValueError):
    """Template string is unusable."""


def fill_template(template: str, class_name: str) -> str:
    """Replace the [CLASS] slot with a class name."""
    if PLACEHOLDER not in template:
        raise TemplateError(
            f"template {template!r} has no {PLACEHOLDER} placeholder")
    return template.replace(PLACEHOLDER, class_name)
