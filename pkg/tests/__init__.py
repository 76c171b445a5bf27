"""Tests package for the exercise service."""
