"""Diversity of solution sets on a free-form polygon domain.

Voronoi-Elites (genetic, feature and learned-latent niching), NSGA-II and
restarted local search on 16-gene octagons, with SDNN, Solow-Polasky and
pure-diversity indicators in genetic and phenotypic space.
"""
from .archive import VEArchive
from .autoencoder import AutoVoronoiElites, ConvAutoencoder
from .experiments import ExperimentConfig, pareto_distance, pareto_ground_truth, run_study
from .geometry import DomainBounds, evaluate, get_bounds, neutrality_cases
from .metrics import diversity_report, pure_diversity, sdnn, solow_polasky
from .optimizers import NSGA2, RestartedLocalSearch, VoronoiElites

__version__ = "0.1.0"

__all__ = [
    "AutoVoronoiElites", "ConvAutoencoder", "DomainBounds", "ExperimentConfig", "NSGA2",
    "RestartedLocalSearch", "VEArchive", "VoronoiElites", "diversity_report", "evaluate",
    "get_bounds", "neutrality_cases", "pareto_distance", "pareto_ground_truth", "pure_diversity",
    "run_study", "sdnn", "solow_polasky",
]
