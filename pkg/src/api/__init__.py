"""HTTP compute service."""
