"""Configuration presets for each of the reproduced figures."""
