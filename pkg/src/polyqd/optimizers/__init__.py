from .base import gaussian_mutate
from .local_search import LocalSearchResult, local_search
from .nsga2 import NSGA2, crowding_distance, dominates, nondominated_sort, sbx_crossover
from .rls import RestartedLocalSearch
from .voronoi_elites import VoronoiElites, feature_descriptors

__all__ = [
    "NSGA2",
    "LocalSearchResult",
    "RestartedLocalSearch",
    "VoronoiElites",
    "crowding_distance",
    "dominates",
    "feature_descriptors",
    "gaussian_mutate",
    "local_search",
    "nondominated_sort",
    "sbx_crossover",
]
