"""pdflow: annotation-based personal-data flow analysis for AL sources."""

__version__ = "0.1.0"
