"""Distances, entropic functionals, hypothesis testing and smoothing bounds."""
