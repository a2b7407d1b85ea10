"""Unit tests for caplaw components."""
