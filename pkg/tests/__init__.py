"""Tests for slotswap."""
