"""RCS Verify - statistical verification of random circuit sampling output."""

__version__ = "1.0.0"
