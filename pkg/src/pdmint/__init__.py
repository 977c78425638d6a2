"""pdmint: symbolic integrals of motion for scale-invariant PDM Schrödinger operators."""

from .certify import Certificate, Policy, certify_many, zero_certificate
from .diffop import (DiffOp, Hamiltonian, commutator, compose, expand_generators,
                     from_hamiltonian, inversion_conjugate, to_selfadjoint_form)
from .exprlang import ParseError, parse_expr, parse_operator, serialize, serialize_operator
from .killing import build_m_matrix, check_killing_identity, killing_family
from .determining import full_residuals, recover_eta, reduced_residuals
from .solve import FindOptions, find_integrals, recognize
from .catalog import Binding, builtin_catalog, instantiate, verify_catalog, verify_row

__version__ = "0.1.0"

__all__ = [
    "Binding", "Certificate", "DiffOp", "FindOptions", "Hamiltonian", "ParseError", "Policy",
    "build_m_matrix", "builtin_catalog", "certify_many", "check_killing_identity", "commutator",
    "compose", "expand_generators", "find_integrals", "from_hamiltonian", "full_residuals",
    "instantiate", "inversion_conjugate", "killing_family", "parse_expr", "parse_operator",
    "recognize", "recover_eta", "reduced_residuals", "serialize", "serialize_operator",
    "to_selfadjoint_form", "verify_catalog", "verify_row", "zero_certificate",
]
