"""Moderate sequences and second-order expansions."""
