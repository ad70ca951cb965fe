"""Alignment-based malware family signatures, features and detection."""

__version__ = "0.1.0"
