"""Test suite for valleymap."""
