"""Sphinx extension generating the configuration reference before sources are read."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from simdet.config import config_fields
from simdet.docgen.writer import ConfigReferenceWriter

if TYPE_CHECKING:
    from sphinx.application import Sphinx
    from sphinx.environment import BuildEnvironment

REFERENCE_DOCNAME = "config-reference"


def update_sphinx(filename: str, text: str, docnames: list[str], env: BuildEnvironment) -> Path:
    file_path = Path(env.srcdir, f"{filename}.rst")
    file_path.write_text(text, encoding="utf-8")

    # Add to files for builder
    if filename not in docnames:
        docnames.append(filename)
    # Add to files for writer
    env.found_docs.add(filename)

    return file_path


def create_config_reference(app: Sphinx, env: BuildEnvironment, docnames: list[str]) -> None:
    text = ConfigReferenceWriter().write_reference(config_fields())
    update_sphinx(REFERENCE_DOCNAME, text, docnames, env)


def setup(app: Sphinx) -> dict[str, bool]:
    """Initialize Sphinx extension."""

    app.connect("env-before-read-docs", create_config_reference)

    return {"parallel_read_safe": True, "parallel_write_safe": True}
