# -*- coding: utf-8 -*-
#
# Sphinx configuration for the propclass documentation.

import datetime
import os
import sys

sys.path.insert(0, os.path.abspath(".."))

import propclass  # noqa: E402

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "propclass"
copyright = "{0}, {1}".format(datetime.date.today().year, propclass.__author__)
version = propclass.__version__
release = propclass.__version__

exclude_patterns = ["_build"]
pygments_style = "sphinx"
autodoc_member_order = "bysource"

if os.environ.get("READTHEDOCS") != "True":
    import sphinx_rtd_theme

    html_theme = "sphinx_rtd_theme"
    html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

html_static_path = ["_static"]
htmlhelp_basename = "propclassdoc"

latex_documents = [
    ("index", "propclass.tex", "propclass Documentation", propclass.__author__, "manual"),
]
man_pages = [
    ("index", "propc", "propclass command line tools", [propclass.__author__], 1),
]
