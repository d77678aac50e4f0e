"""System-level simulator for context-aware D2D sidelink relaying in mMTC."""

__version__ = "0.1.0"
