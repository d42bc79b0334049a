from .layers import Adam, Conv2D, ConvTranspose2D, Dense, ReLU, Reshape, Sequential, Sigmoid
from .autove import AutoVoronoiElites
from .model import ConvAutoencoder, LatentNormalizer, TrainingDivergedError, check_bitmaps

__all__ = [
    "Adam", "AutoVoronoiElites", "Conv2D", "ConvTranspose2D", "ConvAutoencoder", "Dense", "LatentNormalizer",
    "ReLU", "Reshape", "Sequential", "Sigmoid", "TrainingDivergedError", "check_bitmaps",
]
