"""Labelled registers, operators, states and channels."""
