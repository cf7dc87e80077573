"""Multi-blank sentence-completion solver built on a small encoder-decoder."""

__version__ = "0.1.0"
