"""Code to handle the output of the config reference page."""

from __future__ import annotations

from typing import TYPE_CHECKING

from simdet.config import CONFIG_FILE_NAME, RunConfig, format_config, format_value

if TYPE_CHECKING:
    import dataclasses

HEADER = """\
.. This page is generated from the RunConfig fields at build time; edits are lost.
"""

INTRO = f"""\
A run is configured by a plain text file of ``Key: value`` lines, passed
with ``--config``.  Keys are case-insensitive, lines starting with ``#``
are comments, and long values may continue on indented lines.  Flags given
on the command line override the file, and the resolved configuration of
every run is written to ``{CONFIG_FILE_NAME}`` in its output directory.
"""


def _literal(value) -> str:
    text = "" if value is None else format_value(value)
    return f"``{text}``" if text else "*(empty)*"


class ConfigReferenceWriter:
    def __init__(self):
        self.output: list[str] = []

    def emit_text(self, content: str) -> None:
        self.output.append(content)

    def emit_newline(self) -> None:
        self.output.append("")

    def emit_title(self, text: str, *, symbol: str = "=") -> None:
        self.output.append(text)
        self.output.append(symbol * len(text))
        self.emit_newline()

    def emit_subtitle(self, text: str) -> None:
        self.emit_title(text, symbol="-")

    def emit_column_headers(self) -> None:
        self.emit_text(".. list-table::")
        self.emit_text("   :header-rows: 1")
        self.emit_text("   :widths: auto")
        self.emit_newline()
        self.emit_text("   * - Key")
        self.emit_text("     - Default")
        self.emit_text("     - Meaning")

    def emit_key_row(self, field: dataclasses.Field, default) -> None:
        self.emit_text(f"   * - ``{field.metadata['key']}``")
        self.emit_text(f"     - {_literal(default)}")
        self.emit_text(f"     - {field.metadata['doc']}")

    def emit_example(self, config: RunConfig) -> None:
        self.emit_text(".. code-block:: text")
        self.emit_newline()
        for line in format_config(config).splitlines():
            self.emit_text(f"   {line}")

    def write_reference(self, fields: list[dataclasses.Field]) -> str:
        defaults = RunConfig()
        self.emit_text(HEADER)
        self.emit_title("Configuration reference")
        self.emit_text(INTRO)
        self.emit_newline()

        self.emit_subtitle("Keys")
        self.emit_column_headers()
        for field in fields:
            self.emit_key_row(field, getattr(defaults, field.name))
        self.emit_newline()

        self.emit_subtitle("Defaults as a file")
        self.emit_example(defaults)
        self.emit_newline()

        return "\n".join(self.output)
