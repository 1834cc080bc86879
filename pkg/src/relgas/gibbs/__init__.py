"""Grand-canonical point processes: energies, partition functions, sampling, uniqueness."""

from .certificate import CertificateReport, uniqueness_certificate
from .partition import PartitionResult, truncated_partition
from .potential import (
    BoundaryCondition,
    Configuration,
    NBodyTerm,
    Potential,
    conditional_energy,
    interaction_energy,
    local_energy,
)
from .sampler import (
    ChainResult,
    ChainStats,
    GCMCSampler,
    count_event,
    gcmc_chain,
    poisson_chi_square,
    specification_probability,
)

__all__ = [
    "BoundaryCondition",
    "CertificateReport",
    "ChainResult",
    "ChainStats",
    "Configuration",
    "GCMCSampler",
    "NBodyTerm",
    "PartitionResult",
    "Potential",
    "conditional_energy",
    "count_event",
    "gcmc_chain",
    "interaction_energy",
    "local_energy",
    "poisson_chi_square",
    "specification_probability",
    "truncated_partition",
    "uniqueness_certificate",
]
