"""Symbol error rates of broadband links through dispersive atmospheric channels."""

__version__ = "0.1.0"
