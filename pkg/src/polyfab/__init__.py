"""polyfab: exact combinatorial blow-ups and desingularization of polyhedra
systems over support fabrics."""

from .errors import (
    BudgetExceededError,
    CoherenceError,
    ConsistencyDiagnostic,
    DenominatorError,
    DomainError,
    EmptyFabricError,
    EmptyPolyhedronError,
    EmptySystemError,
    InvariantError,
    ParseError,
    PolyfabError,
    PreconditionError,
    ReplayError,
    TopologyError,
)
from .fabric import (
    BlowupResult,
    Equivalence,
    StratumMap,
    SupportFabric,
    blowup,
    connected_components,
    decompose_infinity_stratum,
    equivalent,
    local_fabric,
    stratum,
)
from .polyhedron import (
    CharPolyhedron,
    ExponentVector,
    basis_vector,
    char_push,
    empty_polyhedron,
    hironaka_project,
    lambda_push,
    make,
    member,
    point_polyhedron,
    vector,
)
from .system import (
    Classification,
    PolyhedraSystem,
    SpiReport,
    ValidationReport,
    build_system,
    char_transform,
    classify,
    consistent,
    delta_max,
    divide_system,
    equivalent_systems,
    fitting_system,
    from_closed_strata,
    hironaka_project_system,
    local_system,
    maximal_contact_candidates,
    moderated_transform,
    newton_system,
    reduce_system,
    restrict_system,
    sing,
    spi_report,
    spivakovsky,
    systems_equal,
    total_transform,
    validate,
)
from .resolve import (
    Center,
    ResolutionTrace,
    Snapshot,
    TraceStep,
    make_consistent,
    moderated_sequence,
    replay,
    resolve,
    resolve_dim1,
    resolve_general,
    resolve_qo,
    resolve_special,
    resolve_with_final,
    snapshot,
)
from .apps import (
    MonomialIdealData,
    SupportModelData,
    equimultiple,
    from_monomial_ideal,
    from_support_model,
    is_principal,
    principalize,
)
from .oracle import RandomSpec, check_commutation, member_fm, random_system

__version__ = "0.1.0"
