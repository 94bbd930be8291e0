"""srload: photoionization loading simulator for strontium ion traps."""

__version__ = "0.1.0"
