"""Interactive constraint acquisition from partial membership queries."""

__version__ = "0.1.0"
