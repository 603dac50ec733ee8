"""Packaged experiment plans."""
