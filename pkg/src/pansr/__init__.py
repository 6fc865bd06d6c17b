"""Variable pre-screening for symbolic regression with many irrelevant features."""

__version__ = "0.1.0"
