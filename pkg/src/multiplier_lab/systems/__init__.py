"""Gabor systems through the Zak transform and systems of integer translates."""
