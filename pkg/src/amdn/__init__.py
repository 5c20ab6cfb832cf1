"""Learn STRIPS action models from disordered, parallel and noisy plan traces."""

__version__ = "0.1.0"
