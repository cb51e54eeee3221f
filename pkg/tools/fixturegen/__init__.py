"""Offline generator for the synthetic trace corpus under fixtures/."""
