"""Seeding, optimization, file and tracking utilities."""
