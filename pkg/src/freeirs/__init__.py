"""Invariant random subgroups of the free group of countable rank, at finite truncation."""

from __future__ import annotations

__version__ = "0.1.0"
