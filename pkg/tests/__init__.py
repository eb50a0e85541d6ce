"""Test suite for waveguide-bh."""
