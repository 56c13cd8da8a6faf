"""Inner and outer bounds for two-receiver discrete memoryless broadcast channels."""

__version__ = "0.1.0"
