"""Pulsed type-II SPDC through a single time lens: source, imaging and HOM interference."""

__version__ = "0.1.0"
