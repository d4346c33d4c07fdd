"""Configuration for building the simdet documentation using Sphinx."""

import os
from pathlib import Path
import sys

_ROOT = Path(__file__).resolve().parent.parent
sys.path.append(os.fspath(_ROOT))

# -- Project information -----------------------------------------------------

project = "simdet"
master_doc = "index"

# -- General configuration ---------------------------------------------------

# Add any Sphinx extension module names here, as strings.
extensions = [
    "simdet.docgen",
]

# List of patterns (relative to source dir) to include when looking for source files.
include_patterns = [
    "index.rst",
    "usage.rst",
    "formats.rst",
    # generated by simdet.docgen
    "config-reference.rst",
]

# Warn on missing references
nitpicky = True

# -- Options for HTML output -------------------------------------------------

html_title = "simdet"
html_show_sourcelink = False
html_copy_source = False
