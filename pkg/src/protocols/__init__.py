"""Executable protocol constructions."""
