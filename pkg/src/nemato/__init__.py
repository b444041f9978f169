"""Nematic elastomer quasistatics with Orlicz growth."""

__version__ = "0.1.0"
