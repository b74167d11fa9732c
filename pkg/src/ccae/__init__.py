"""Channel charting with representation-constrained autoencoders."""

__version__ = "0.1.0"
