"""Orthogonal NMF clustering by non-convex penalty optimization."""
