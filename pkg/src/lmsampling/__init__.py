"""Random sampling of long-memory stationary processes."""
__version__ = "0.1.0"
