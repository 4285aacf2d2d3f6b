"""Abelian JSJ decompositions of groups acting on trees with free-abelian vertex and edge stabilizers."""

from .graph import Abelian, Edge, GraphOfGroups, Opaque, Polycyclic, abelianization, validate
from .io import parse, serialize, to_dot
from .jsj import bounded_rank_jsj, compute_jsj
from .normal_forms import classify_semidirect, normalize_22

__all__ = [
    "Abelian", "Edge", "GraphOfGroups", "Opaque", "Polycyclic", "abelianization", "validate",
    "parse", "serialize", "to_dot", "compute_jsj", "bounded_rank_jsj",
    "classify_semidirect", "normalize_22",
]
