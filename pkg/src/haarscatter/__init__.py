"""Deep orthogonal Haar scattering networks.

Forward transforms (free and graph-structured), unsupervised pairing
learning by perfect matching, Haar wavelet analysis on the learned dyadic
partitions, invertibility from interlaced pairings, ring-process recovery
experiments, and a feature-selection + kernel-classification pipeline.
"""

from .core import (
    HaarNetwork,
    canonical_pairing,
    count_of_order,
    forward,
    forward_free_layer,
    forward_structured_layer,
    haar_pair,
    linear_replay,
    order_of,
    random_network,
    random_pairing,
    sign_decomposition,
    transform,
    transform_matrix,
    unpair,
)
from .classify import (
    FeatureMatrix,
    GaussianKernelClassifier,
    SelectionState,
    build_features,
    fit_kernel_classifier,
    ols_select,
    unit_normalize_rows,
)
from .graph import (
    DyadicPartition,
    HaarWaveletBasis,
    ReferenceGraph,
    build_partition,
    connectivity_fraction,
    hadamard_of_output,
    verify_wavelet_identity,
    wavelet_basis,
)
from .gridpair import grid_network, grid_pairing_variants, grid_pairings
from .inverse import (
    InterlacedPairingSet,
    TransformBag,
    check_interlaced,
    forward_bag,
    invert_layer,
    make_interlaced,
    reconstruct,
)
from .learn import (
    BaggedModel,
    TrainConfig,
    cost_l1,
    cost_mixed,
    empirical_variance,
    train_bagged,
    train_layerwise,
)
from .matching import enumerate_pairings, match_exact, match_greedy
from .model_io import SavedModel, load_model, save_model
from .ring import (
    RingModel,
    correlation_gap,
    recovery_grid,
    ring_model,
    sample,
    sample_size_bound,
    tv_recovery_trial,
)

__version__ = "0.1.0"
