"""Discrete-event RPL simulator with a DAO insider attacker and a
blacklist-based DAO flood defense."""

__version__ = "0.1.0"
