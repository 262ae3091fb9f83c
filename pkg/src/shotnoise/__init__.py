"""Poisson shot-noise transforms and their fixed points."""
