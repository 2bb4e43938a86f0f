"""Scale transforms for diagonal SDEs with partially irregular drift."""

__version__ = "0.1.0"
