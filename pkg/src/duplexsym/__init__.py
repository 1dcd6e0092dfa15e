"""duplexsym: symmetry-breaker analysis of duplex oscillator networks.

A directed top layer of Hindmarsh-Rose oscillators drives a diffusively
coupled bottom layer through one-to-one inter-layer links.  The package
enumerates the symmetry-induced cluster patterns that survive the drive,
reduces the dynamics to cluster representatives, estimates transverse
Lyapunov exponents per cluster, and reproduces pattern switching and the
transition-pathway graph as data files.
"""

from .topology import (
    Graph,
    InterLayerCoupling,
    DuplexTopology,
    CouplingStrengths,
    TopologyError,
    build_graph,
    build_duplex,
    laplacian,
)
from .symmetry import (
    PermGroup,
    Partition,
    PatternState,
    automorphisms,
    subgroups,
    orbit_partition,
    enumerate_patterns,
)
from .compat import (
    CompatibilityClasses,
    DuplexClusters,
    MixedClusterError,
    conjugacy_holds,
    compatibility_classes,
    duplex_orbit_partition,
    all_or_nothing,
    is_pattern_invariant,
    complete_sync_excluded,
)
from .quotient import (
    QuotientSystem,
    NotEquitableError,
    characteristic_matrix,
    projector,
    quotient_matrices,
    quotient_rhs,
)
from .dynamics import (
    HRParams,
    DuplexState,
    Trajectory,
    DivergenceError,
    SigmaSchedule,
    hr_field,
    hr_jacobian,
    full_rhs,
    integrate,
    simulate_duplex,
    pattern_initial_condition,
)
from .stability import (
    StabilityBasis,
    ClusterExponents,
    NotOrbitPartitionError,
    stability_basis,
    transverse_lyapunov,
    stability_map,
    duplex_clusters_for_pattern,
)
from .measurement import cluster_error, pattern_error, detect_pattern
from .experiment import (
    ConfigError,
    ExperimentConfig,
    TransitionGraph,
    load_config,
    config_from_preset,
    run_switching,
    find_pathways,
    emit_outputs,
)
from .presets import Preset, five_node, six_node, get_preset

__version__ = "1.0.0"
