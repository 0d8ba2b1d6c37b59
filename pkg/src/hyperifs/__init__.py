"""Iterated function systems acting on grid hyperspaces."""

__version__ = "0.1.0"
