"""Capacity upper bounds for approximately degradable quantum channels."""

from __future__ import annotations

__version__ = "1.0.0"
