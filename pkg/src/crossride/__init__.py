"""Cross-platform ride-sharing simulation with profit-aware collaboration."""

__version__ = "0.1.0"
