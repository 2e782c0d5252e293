"""Fuel-constrained two-person stochastic duel."""
