"""Range-only localization of n-dimensional sensor networks via generalized
barycentric coordinates computed from Cayley-Menger bi-determinants."""

from .barycentric import (
    CoordinateRow,
    barycentric_from_coordinates,
    barycentric_from_distances,
    generalized_coordinates,
)
from .geometry import cayley_menger_bidet, cayley_menger_det, signed_volume, squared_distance
from .network import (
    SensorNetwork,
    SimplexIndexSet,
    build_edges,
    enumerate_simplex_sets,
    enumerate_simplex_sets_capped,
    neighbors,
    prune_unlocalizable,
)
from .pipeline import localize
from .solver import (
    assemble,
    disjoint_paths_diagnostic,
    rcond_estimate,
    solve_direct,
    solve_iterative,
)

__version__ = "0.1.0"
