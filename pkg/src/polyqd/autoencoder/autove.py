"""Voronoi-Elites with descriptors learned by the shape autoencoder."""
from __future__ import annotations

import numpy as np

from .. import geometry as geo
from ..optimizers.voronoi_elites import VoronoiElites
from .model import ConvAutoencoder


class AutoVoronoiElites(VoronoiElites):
    """VE whose niching space is the normalized latent code of a cAE.

    The Sobol initial population is expressed and used to train the
    autoencoder. VE then runs for the first half of the generations, the
    autoencoder is fine-tuned on the elites' bitmaps, the archive is
    re-encoded and re-pruned, and VE runs for the remaining generations.
    Training does not count toward ``n_evals_``; only expressed genomes do.

    Extra parameters
    ----------------
    latent_dim : int
    epochs : int
        Epochs of each of the two training phases.
    learning_rate, batch_size : float, int
        Adam step and mini-batch size. The batch shrinks to the corpus size
        when the archive is smaller than ``batch_size``.

    Extra attributes
    ----------------
    autoencoder_ : ConvAutoencoder
    loss_history_ : list of float
        Per-epoch training loss over both phases.
    """

    def __init__(self, capacity=100, generations=256, mutation_sigma=0.1,
                 descriptor="latent", bounds="A", random_state=None,
                 latent_dim=2, epochs=350, learning_rate=1e-3, batch_size=32):
        super().__init__(capacity=capacity, generations=generations,
                         mutation_sigma=mutation_sigma, descriptor=descriptor,
                         bounds=bounds, random_state=random_state)
        self.latent_dim = latent_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size

    def _descriptor_modes(self):
        return ("latent",)

    def _descriptor_dim(self) -> int:
        return int(self.latent_dim)

    def describe(self, evaluation: geo.Evaluation) -> np.ndarray:
        return self.autoencoder_.transform(evaluation.bitmaps)

    def _train(self, bitmaps):
        ae = self.autoencoder_
        ae.set_params(batch_size=min(int(self.batch_size), len(bitmaps)))
        ae.fit(bitmaps)

    def fit(self, X=None, y=None):
        self._validate_params()
        rng = np.random.default_rng(self.random_state)
        init = geo.evaluate(self._initial_genomes(X), self._bounds())
        self.autoencoder_ = ConvAutoencoder(
            latent_dim=int(self.latent_dim), epochs=int(self.epochs),
            learning_rate=self.learning_rate, warm_start=True,
            random_state=int(rng.integers(0, 2**31)))
        self._train(init.bitmaps)

        self._start(init.genomes, rng)
        first = int(self.generations) // 2
        self._step(first)

        archive = self.archive_
        self._train(archive.bitmaps)
        archive.replace_descriptors(self.autoencoder_.transform(archive.bitmaps))
        archive.prune_to_capacity()
        self._step(int(self.generations) - first)
        self.loss_history_ = list(self.autoencoder_.loss_history_)
        return self._finish()
