from .factorization import Factorization, factorize_commuting, generated_algebra
from .generator import GeneratedStrategy, perfect_guessing_strategy, random_game
from .pipeline import (
    ClassicalizationCertificate,
    CommutationReport,
    CongruenceStep,
    InducedProjectors,
    Verification,
    ChainResult,
    alice_commutator_norm,
    alice_nondestructive_chain,
    classicalize,
    commutation_check,
    induced_projectors,
    restrict_to_support,
    verify_certificate,
)

__all__ = [
    "ClassicalizationCertificate",
    "CommutationReport",
    "CongruenceStep",
    "Factorization",
    "GeneratedStrategy",
    "InducedProjectors",
    "Verification",
    "alice_commutator_norm",
    "alice_nondestructive_chain",
    "ChainResult",
    "classicalize",
    "commutation_check",
    "factorize_commuting",
    "generated_algebra",
    "induced_projectors",
    "perfect_guessing_strategy",
    "random_game",
    "restrict_to_support",
    "verify_certificate",
]
