"""Training-side toolkit for dialectal Arabic-English SMT."""

__version__ = "0.1.0"
