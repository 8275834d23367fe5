"""Quantum Hamiltonian ``(Delta_k + R/6) / (2 k^2)`` (hbar = 1/k) and
quantum-equivalence verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadK, DimensionMismatch, RNotInvariant
from .magnetic import (
    MagneticOperator,
    build_operator,
    check_common_descent,
    compare_spectra,
    eigenvalues,
    sweep,
)

DEFAULT_CURVATURE = -2.0


@dataclass
class CurvatureField:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @classmethod
    def constant(cls, n: int, value: float = DEFAULT_CURVATURE) -> "CurvatureField":
        return cls(np.full(n, float(value)))

    def __len__(self):
        return len(self.values)


def quantum_hamiltonian(delta_k: MagneticOperator, R: CurvatureField, k: int) -> MagneticOperator:
    if k <= 0:
        raise BadK(f"k must be a positive integer, got {k}")
    if len(R) != delta_k.dimension:
        raise DimensionMismatch(f"curvature has {len(R)} values for dimension {delta_k.dimension}")
    H = delta_k.matrix + np.diag(R.values / 6.0)
    return MagneticOperator(H / (2.0 * k * k), k, label=f"H_hat[{delta_k.label}]")


@dataclass
class QuantumSpectrumReport:
    ks: list[int]
    eigenvalues_1: list[np.ndarray]
    eigenvalues_2: list[np.ndarray]
    gaps: list[float]
    tol: float
    verdict: bool = field(init=False)

    def __post_init__(self):
        self.verdict = all(g <= self.tol for g in self.gaps)

    def to_dict(self) -> dict:
        return {
            "verdict": "quantum_equivalent" if self.verdict else "not_equivalent",
            "tol": self.tol,
            "levels": [
                {"k": k, "eigenvalues": e1.tolist(), "eigenvalues_2": e2.tolist(), "gap": g}
                for k, e1, e2, g in zip(self.ks, self.eigenvalues_1, self.eigenvalues_2, self.gaps)
            ],
        }


def quantum_spectra(
    ops1: Sequence[MagneticOperator],
    ops2: Sequence[MagneticOperator],
    R1: CurvatureField,
    R2: CurvatureField,
    tol: float = 1e-8,
) -> QuantumSpectrumReport:
    """Compare the quantized spectra of two families of bundle Laplacians ``Delta_k``."""
    ks, e1s, e2s, gaps = [], [], [], []
    for o1, o2 in zip(ops1, ops2):
        if o1.k != o2.k:
            raise ValueError("operator families are not aligned in k")
        e1 = eigenvalues(quantum_hamiltonian(o1, R1, o1.k))
        e2 = eigenvalues(quantum_hamiltonian(o2, R2, o2.k))
        ks.append(o1.k)
        e1s.append(e1)
        e2s.append(e2)
        gaps.append(compare_spectra(e1, e2, tol).max_gap)
    return QuantumSpectrumReport(ks, e1s, e2s, gaps, tol)


def quantum_equivalence(
    m1,
    conn1,
    m2,
    conn2,
    ks: Sequence[int],
    R1: CurvatureField | None = None,
    R2: CurvatureField | None = None,
    mid=None,
    tol: float = 1e-8,
) -> QuantumSpectrumReport:
    """Quantum-equivalence verdict for two quotients carrying descended connections.

    With ``mid`` (the quotient by G) both curvature fields are checked to be
    lifts of one function on ``mid``; failures raise ``RNotInvariant``.
    """
    ks = list(ks)
    bad = [k for k in ks if k <= 0]
    if bad:
        raise BadK(f"quantum levels need k >= 1, got {bad}")
    R1 = R1 if R1 is not None else CurvatureField.constant(m1.vertex_count)
    R2 = R2 if R2 is not None else CurvatureField.constant(m2.vertex_count)
    if mid is not None:
        check_common_descent(m1, R1.values, m2, R2.values, mid, RNotInvariant)
    ops1 = sweep(lambda k: build_operator(m1, conn1, k, label="M1"), ks)
    ops2 = sweep(lambda k: build_operator(m2, conn2, k, label="M2"), ks)
    return quantum_spectra(ops1, ops2, R1, R2, tol)
