"""Self-consistent standard-map transport toolkit."""

__version__ = "0.1.0"
