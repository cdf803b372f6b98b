"""Configuration file for the Sphinx documentation builder."""

import os
import sys
from importlib.metadata import version

sys.path.insert(0, os.path.abspath(".."))

project = "cdrcommute"
copyright = "2024, cdrcommute developers"
author = "cdrcommute developers"

release = version("cdrcommute")
version = ".".join(release.split(".")[:2])

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
    "sphinx.ext.autosectionlabel",
]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"
language = "en"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

html_theme = "sphinx_rtd_theme"
html_theme_options = {
    "collapse_navigation": True,
    "sticky_navigation": True,
    "navigation_depth": 3,
}
htmlhelp_basename = "cdrcommutedoc"

man_pages = [(master_doc, "cdrcommute", "cdrcommute Documentation", [author], 1)]

# Dataclass fields and config keys are documented on the class
autodoc_member_order = "bysource"
autodoc_default_options = {"undoc-members": False}


def skip(app, what, name, obj, would_skip, options):
    """Skip __init__ and generated dataclass dunders."""
    if name in ("__init__", "__post_init__", "__eq__", "__hash__", "__repr__"):
        return True
    return would_skip


def setup(app):
    """Setup the Sphinx app."""
    app.connect("autodoc-skip-member", skip)
