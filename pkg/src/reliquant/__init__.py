"""Quantified software reliability.

Fault-tree quantification and importance ranking (:mod:`reliquant.faulttree`),
zero-failure test planning (:mod:`reliquant.stats`), finite input domains
(:mod:`reliquant.domain`), operational profiles (:mod:`reliquant.profile`) and
exhaustive / statistical test campaigns (:mod:`reliquant.campaign`).
"""

from .campaign import (
    CampaignResult,
    CampaignSpec,
    Mode,
    Oracle,
    SubjectAdapter,
    derive_fault_tree_input,
    run_exhaustive,
    run_partial_exhaustive,
    run_statistical,
)
from .domain import FieldSpec, IndexRange, InputDomain, enumerate_filtered, parse_domain, partition
from .errors import ParseError, ReliquantError, ValidationError
from .faulttree import (
    BasicEvent,
    FaultTree,
    Gate,
    GateKind,
    Method,
    birnbaum_importance,
    fussell_vesely_importance,
    improvement_ranking,
    minimal_cut_sets,
    parse_fault_tree,
    top_event_probability,
)
from .profile import OperationalProfile, Stratum, parse_profiles, profile_mass, sample, validate_profile
from .stats import (
    achieved_confidence,
    demonstrated_failure_rate,
    demonstrated_pfd,
    required_test_count,
    required_test_hours,
)

__version__ = "0.1.0"
