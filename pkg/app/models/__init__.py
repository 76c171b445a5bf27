"""Data models for RCS Verify."""
