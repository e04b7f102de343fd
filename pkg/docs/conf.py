# Sphinx configuration of the sparse-meter API docs.
import os
import sys
import datetime

import sphinx_bootstrap_theme

now = datetime.datetime.now()
sys.path.insert(0, os.path.abspath('../'))

project = 'sparse-meter'
copyright = '{}, sparse-meter developers'.format(str(now.year))
author = 'sparse-meter developers'
release = ''
version = ''

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.coverage',
    'sphinx.ext.imgmath',
    'sphinx.ext.githubpages',
    'sphinxcontrib.fulltoc',
    'sphinx.ext.napoleon'
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['_build']
pygments_style = None

html_theme = 'bootstrap'
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()
html_theme_options = {
    'navbar_class': 'navbar navbar-inverse',
    'navbar_fixed_top': 'true',
    'navbar_pagenav': True,
    'source_link_position': 'nav',
    'bootswatch_theme': 'united',
    'bootstrap_version': '3',
}
html_sidebars = {
    '**': ['localtoc.html']
}

# keep classes, functions and data of a module together
autodoc_member_order = 'groupwise'
napoleon_google_docstring = True

htmlhelp_basename = 'sparsemeterdoc'

latex_documents = [
    (master_doc, 'sparse-meter.tex', 'sparse-meter Documentation',
     'sparse-meter developers', 'manual'),
]
man_pages = [
    (master_doc, 'sparse-meter', 'sparse-meter Documentation', [author], 1)
]
texinfo_documents = [
    (master_doc, 'sparse-meter', 'sparse-meter Documentation', author, 'sparse-meter',
     'Privacy-preserving release of smart meter data.', 'Miscellaneous'),
]
epub_title = project
epub_exclude_files = ['search.html']
