"""Random-walk loop soups, loop-erased walks and Wilson-type samplers."""
from ._accel import USE_NUMBA, backend
from .lattice import (Domain, PlanarGraph, build_square_lattice, build_perturbed_lattice,
                      transition_probability, check_bounded_density, max_edge_diameter,
                      estimate_crossing_probability, graph_ab, graph_abc, wired_grid_2x2)
from .walk import WalkPath, run_walk, run_walk_until, walk_to_polyline, StepCapExceeded
from .erasure import ErasureDecomposition, loop_erase, last_visit
from .soup import (UnrootedLoop, LoopSoup, rooted_loop_mass, unrooted_loop_mass,
                   enumerate_loops, total_loop_mass, sample_loop_soup, restrict_soup)
from .metrics import (Polyline, frechet_distance, discrete_frechet, unrooted_loop_distance,
                      loop_soup_distance, diameter, MatchingCertificate)

__version__ = "0.1.0"
