"""Word sense disambiguation over separable sense clusters in a semantic network."""

__version__ = "0.1.0"
