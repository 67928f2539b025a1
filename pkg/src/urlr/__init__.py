"""Robust learning to rank from noisy pairwise comparisons."""
