"""Smoothness functionals, sharpness constructions and generalized zero sets."""
