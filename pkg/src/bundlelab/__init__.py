"""Spectral laboratory for unitary flat vector bundles over regular graphs."""

__version__ = "0.1.0"

from .graphs import (RegularGraph, NbPath, build_graph, from_undirected,
                     petersen_graph, cycle_graph, bouquet_graph, girth,
                     injectivity_radius, bs_profile, tree_closed_walks,
                     tree_first_returns, enumerate_nb_paths,
                     enumerate_closed_walks, spanning_tree)
from .bundles import (FlatBundle, GaugeTransform, make_bundle, trivial_bundle,
                      random_bundle, laplacian_matrix, holonomy,
                      trace_power_oracle, gauge_trivialize,
                      endomorphism_bundle, save_bundle, load_bundle)
from .arithmetic import (QuaternionGen, quaternion_generators, sqrt_minus_one,
                         legendre, projective_matrix, su2_of, cayley_graph,
                         cayley_bundle, cayley_bundle_from_reps, sym_rep,
                         su2_character, zero_one_check)
from .kernels import (KernelOperator, LevelDecomposition, identity_kernel,
                      random_kernel, chebyshev_h, to_matrix,
                      tree_kernel_matrix, cut, reverse, grad, grad_adj, nb,
                      nb_adj, truncate, truncate_adj, commutator,
                      kernel_inner, l2k_norm, linf_norm, hs_norm, average,
                      hs_vs_l2_check, b1_matrix, b1_structure_report,
                      identity_suite, time_average)
from .cp1 import (CP1Point, FockSection, SphereFunction, ToeplitzOperator,
                  fs_distance, bergman, monomial_integral, toeplitz,
                  toeplitz_norm_check, section_eval, pointwise_mass, roots,
                  quadrature_grid, harmonic_basis, so3_of, parse_observable)
from .lab import (Spectrum, eigendecompose, eigenvalues_only,
                  nontrivial_radius, km_density, km_cdf, km_moment,
                  ks_distance, logdet, logdet_limit_constant, gap_report,
                  mixed_observable, quantum_variance, qe_experiment,
                  zero_experiment, harmonic_block_check, alon_boppana_report)
