"""Frequency-aware image restoration for visual anomaly detection."""
