"""Spectral substrate: torus grids, transforms, norms and log-log fits."""
