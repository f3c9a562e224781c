"""mofcodex: structured synthesis records from MOF synthesis paragraphs."""

__version__ = "0.1.0"
