"""Verification services: sample IO, simulation and statistical metrics."""
