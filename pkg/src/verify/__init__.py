"""Property suites and their registry."""
