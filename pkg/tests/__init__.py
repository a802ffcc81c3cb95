"""Tests for capbound."""
