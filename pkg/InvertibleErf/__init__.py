from .approx_core import (
    ERF_COEFFS,
    ERF_CROSSOVER,
    PHI_COEFFS,
    PHI_CROSSOVER,
    TABLE_ITEMS,
    WINITZKI_COEFFS,
    ApproxFunction,
    RationalExponentCoeffs,
    Target,
    Variant,
    clamped,
    erf_approx,
    erfc_approx,
    exponent,
    phi_approx,
    q_approx,
    winitzki_erf,
    winitzki_erfc,
)
from .error_analysis import (
    CertificationReport,
    ErrorReport,
    GridSpec,
    certify,
    find_crossover,
    find_rel_threshold,
    relative_error,
    scan,
    tail_certificate,
)
from .exceptions import BracketingError, DomainError, InversionError, InvertibleErfError, OracleError
from .inverse import (
    InverseResult,
    erf_approx_inv,
    erfc_approx_inv,
    invert_exponent,
    phi_approx_inv,
    q_approx_inv,
    winitzki_erf_inv,
    winitzki_erfc_inv,
)
from .reference_oracle import OracleConfig, ReferenceOracle, erf_ref, erfc_ref, phi_ref, q_ref
