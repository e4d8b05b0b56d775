"""Joint source-channel coding for the binary two-way relay downlink."""

__version__ = "0.1.0"
