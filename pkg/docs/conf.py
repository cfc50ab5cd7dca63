# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

from datetime import datetime
from importlib.metadata import metadata

# -- Project information -----------------------------------------------------

info = metadata("clusterd2d")
project_name = info["Name"]
author = info["Author"] or "clusterd2d developers"
copyright = f"{datetime.now():%Y}, {author}."
version = info["Version"]
release = info["Version"]

needs_sphinx = "4.0"

# -- General configuration ---------------------------------------------------

extensions = [
    "myst_nb",
    "sphinx_copybutton",
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",
    "sphinx_autodoc_typehints",
    "sphinx.ext.mathjax",
    "sphinx_design",
]

autosummary_generate = True
autodoc_process_signature = True
autodoc_member_order = "groupwise"
default_role = "literal"
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_include_init_with_doc = False
napoleon_use_rtype = True
napoleon_use_param = True
myst_heading_anchors = 3
myst_enable_extensions = [
    "amsmath",
    "colon_fence",
    "deflist",
    "dollarmath",
]
myst_url_schemes = ("http", "https", "mailto")
nb_execution_mode = "off"
typehints_defaults = "braces"

source_suffix = {
    ".rst": "restructuredtext",
}

intersphinx_mapping = {
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
    "dask": ("https://docs.dask.org/en/latest/", None),
}

exclude_patterns = ["_build", "Thumbs.db"]
nitpicky = False

# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_book_theme"
html_title = project_name
html_theme_options = {"navigation_with_keys": True}
pygments_style = "default"
