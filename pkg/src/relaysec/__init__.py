"""Secrecy-rate analysis and simulation for two-way untrusted relaying with wireless-powered helpers."""

from .system import (ChannelRealization, LinkStats, Scenario, SnrTriple, SystemParams,
                     derive_link_stats)

__all__ = ["ChannelRealization", "LinkStats", "Scenario", "SnrTriple", "SystemParams",
           "derive_link_stats"]
