"""Theme/variation corpus curation, analysis, and generation toolkit."""

__version__ = "0.1.0"
