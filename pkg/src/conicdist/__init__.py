"""Structured distance to nonsurjectivity of conic linear systems."""
