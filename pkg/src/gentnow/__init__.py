"""gentnow: nowcast neighborhood gentrification from short-term-rental data."""

__version__ = "0.1.0"
