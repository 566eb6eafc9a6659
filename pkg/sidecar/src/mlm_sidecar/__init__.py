"""Real-model MLM backend for the substitute-generation wire protocol."""

__version__ = "0.1.0"
