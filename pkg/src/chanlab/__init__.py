"""Random covariant quantum channels: sampling, twirling, PPT and EB tests."""

__version__ = "0.1.0"
