# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = 'bsi'
copyright = '2022, bsi developers'
author = 'bsi developers'


# -- General configuration ---------------------------------------------------

extensions = [
    'myst_parser',
    'sphinx.ext.mathjax',
    'sphinx.ext.todo'
]
myst_enable_extensions = ['dollarmath']
todo_include_todos = True

templates_path = ['_templates']

language = 'en'

exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = 'furo'

html_static_path = ['_static']
