"""Double-threshold human-in-the-loop classification policies."""

__version__ = "0.1.0"
