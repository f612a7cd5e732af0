"""Random bit generation from radio spectrograms, with an SP 800-22 test battery."""

__version__ = "0.1.0"
