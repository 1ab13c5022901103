# NPDiff - Noise prior diffusion for mobile traffic forecasting

__version__ = "0.1.0"
