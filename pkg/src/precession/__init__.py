"""Numerics for precession-protocol nonclassicality tests."""
