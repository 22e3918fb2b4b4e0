"""nulldist: a numerical engine for the null distance on explicit spacetimes.

Distance estimation via causal-lattice shortest paths, causality-encoding
verification, bi-Lipschitz comparisons, and metric-completeness probes.
"""

__version__ = "0.1.0"

from .errors import (
    BadParams,
    ConfigError,
    DegenerateSegment,
    EmptyRegion,
    NoCausalPairs,
    NotCausal,
    NotCausalRay,
    NotTemporal,
    NullDistError,
    OutOfDomain,
    OutOfRange,
    TooLarge,
    UnknownModel,
    Unreachable,
    ZeroVector,
)
from .models import (
    CATALOG_NAMES,
    AuxiliaryMetric,
    SpacetimeModel,
    VectorClass,
    catalog,
    classify_vector,
    conformal_scale,
    lapse_alpha,
    scaled_euclidean,
    wick_norm_sq,
    with_time_function,
)
from .paths import (
    CausalVerdict,
    PiecewisePath,
    null_length,
    path_from_breakpoints,
    segment_causal,
    verify_causal,
    wick_length,
)
from .lattice import CausalLattice, LatticeSpec, build, stencil_offsets
from .estimates import (
    DistanceEstimate,
    EstimateOptions,
    convergence_report,
    estimate,
    exact_oracle,
)
from .witness import (
    WitnessResult,
    ads_null_geodesic,
    counterexK_witness,
    counterexsimple_witness,
    minkowski_bounce,
    tent_function,
    wick2_deformation,
)
from .relations import (
    EncodingOptions,
    RelationVerdict,
    encoding_report,
    jplus_verdict,
    rhat_member,
)
from .probes import (
    DEFAULT_SEED,
    EscapeWitness,
    Ray,
    anti_lipschitz_scan,
    bilipschitz_scan,
    escape_probe,
    escape_probe_sequence,
    steepness_scan,
)
