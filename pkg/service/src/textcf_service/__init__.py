"""Transformer-backed scorer service speaking the textcf wire protocol."""

__version__ = "0.1.0"
