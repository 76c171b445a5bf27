"""API routers for RCS Verify."""
