"""rimlab: a simulation lab for i.i.d. random compositions of interval maps.

Builds families of expanding ("good") and attracting ("bad") interval maps
sharing one turning point, simulates random orbits of the associated skew
product, discretizes the annealed transfer operator to estimate stationary
densities, samples first-return times on an inducing region, and evaluates
the closed-form envelope and measure bounds the theory provides.
"""

from rimlab.maps import (
    MapDescriptor,
    MapKind,
    make_map,
    evaluate,
    deriv,
    schwarzian,
    branch_inverse,
    validate_map,
)
from rimlab.system import (
    RandomSystem,
    make_system,
    theta,
    expanding_average,
    sample_word,
    iterate,
    orbit_statistics,
)
from rimlab.ulam import (
    UlamOperator,
    DensityEstimate,
    build_ulam,
    power_iterate,
    push_lebesgue,
    lq_norm,
    cdf_distance,
)
from rimlab.inducing import (
    CriticalQuadruple,
    InducingScheme,
    critical_points_iterate,
    build_inducing_domain,
    find_kappa,
    sample_return_time,
    kac_estimate,
)
from rimlab.bounds import (
    EnvelopeConstants,
    BoundParameters,
    envelope_constants,
    check_envelope,
    measure_bound,
    log_bound,
)

__version__ = "0.1.0"
