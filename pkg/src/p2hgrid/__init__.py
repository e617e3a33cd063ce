"""Power-to-hydrogen sizing and scheduling inside a multi-period DC optimal power flow."""

__version__ = "0.1.0"
