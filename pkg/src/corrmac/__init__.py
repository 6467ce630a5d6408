"""Joint channel decoding of correlated sources over orthogonal AWGN links."""

__version__ = "0.1.0"
