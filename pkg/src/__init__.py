"""One-shot quantum information quantities, moderate-deviation expansions and property checks."""

__version__ = "0.1.0"
__author__ = "neuragicus"
