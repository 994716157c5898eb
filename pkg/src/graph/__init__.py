from .hypergraph import (
    InteractionGraph,
    build_graph,
    diameter,
    distance,
    estimate_spatial_dimension,
    max_neighbors,
    spatial_dimension_constant,
    sphere,
    sphere_sizes,
)
from .lattices import chain, figure_hypergraph, square_lattice
