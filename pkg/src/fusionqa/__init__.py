"""Quality assessment for pan-sharpened imagery."""

__version__ = "0.1.0"
