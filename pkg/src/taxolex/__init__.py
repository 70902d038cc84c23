"""Apply visualization task taxonomies, written as regular grammars, to interaction logs."""

__version__ = "0.1.0"
