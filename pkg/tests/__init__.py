"""Pytest tests to run against cdrcommute."""
