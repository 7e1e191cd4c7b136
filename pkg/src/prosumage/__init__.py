"""Power system capacity expansion with prosumer self-generation targets."""

__version__ = "0.1.0"
