"""Near/far-field conical source localization in modified polar representation."""

__version__ = "0.1.0"
