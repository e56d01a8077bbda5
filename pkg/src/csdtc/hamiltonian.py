"""Charge-basis Hamiltonian of the two data qubits and the shunted coupler.

Each node keeps Cooper-pair numbers -n_max..n_max and the full operator lives
on the tensor product in fixed node order (1, 2, 3, 4). H/h in GHz:

    sum_ij Ec_ij n_i n_j  -  sum_i ej_i cos(phi_i)
    -  ej5/2 (exp(-i 2 pi phi_ex) S4+ S3- + h.c.)

The external flux enters only through the phase of the JJ5 hopping term, so
the spectrum is exactly periodic in the reduced flux, and even in it: the
parity map n_i -> -n_i conjugates that phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .circuit import (
    CircuitParams,
    build_capacitance_matrix,
    charging_matrix,
    derive_junction_energies,
    require_valid,
)
from .errors import ConfigError

_DIMENSION_CAP = 2_000_000
_REAL_PHASE_TOL = 1e-15


@dataclass(frozen=True)
class FluxPoint:
    """Reduced external flux through the coupler loop, in units of Phi0."""

    phi_ex: float

    def __post_init__(self):
        if not np.isfinite(self.phi_ex):
            raise ConfigError(f"flux must be finite, got {self.phi_ex}")

    def canonical(self) -> "FluxPoint":
        """Periodic reduction into [-0.5, 0.5]."""
        return FluxPoint(float(self.phi_ex - np.round(self.phi_ex)))

    def __float__(self) -> float:
        return float(self.phi_ex)


def as_flux(value) -> FluxPoint:
    return value if isinstance(value, FluxPoint) else FluxPoint(float(value))


@dataclass(frozen=True)
class ChargeBasisConfig:
    """Charge-basis truncation (per-node -n_max..n_max) and eigenstate count."""

    n_max: int = 7
    num_eigenstates: int = 16

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 3:
            raise ConfigError(f"n_max must be an integer >= 3, got {self.n_max}")
        if int(self.num_eigenstates) != self.num_eigenstates or self.num_eigenstates < 6:
            raise ConfigError(f"num_eigenstates must be an integer >= 6, got {self.num_eigenstates}")
        if self.dimension > _DIMENSION_CAP:
            raise ConfigError(
                f"n_max={self.n_max} gives dimension {self.dimension} beyond the supported {_DIMENSION_CAP}"
            )

    @property
    def states_per_node(self) -> int:
        return 2 * int(self.n_max) + 1

    @property
    def dimension(self) -> int:
        return self.states_per_node**4


@dataclass(frozen=True)
class SparseHamiltonian:
    """Assembled sparse Hermitian operator, H/h in GHz."""

    matrix: sp.csr_matrix
    n_max: int
    phi_ex: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def single_mode_operators(n_max: int):
    """Charge, cosine and raising-shift operators for one node.

    The shift S+ maps |n> to |n+1> with hard truncation at the top state;
    cos(phi) = (S+ + S-)/2.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ConfigError(f"n_max must be an integer >= 1, got {n_max}")
    size = 2 * int(n_max) + 1
    charge = sp.diags(np.arange(-n_max, n_max + 1, dtype=float)).tocsr()
    raise_op = sp.diags(np.ones(size - 1), -1).tocsr()
    cosine = sp.diags([np.full(size - 1, 0.5), np.full(size - 1, 0.5)], [-1, 1]).tocsr()
    return charge, cosine, raise_op


def _kron4(ops) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out


def _charge_grid(n_max: int) -> np.ndarray:
    """(dimension, 4) table of charge numbers per node, kron (C) ordering."""
    nvals = np.arange(-n_max, n_max + 1, dtype=float)
    grids = np.meshgrid(nvals, nvals, nvals, nvals, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def assemble_hamiltonian(params: CircuitParams, flux, cfg: ChargeBasisConfig) -> SparseHamiltonian:
    """Assemble the circuit Hamiltonian at the given reduced flux."""
    require_valid(params)
    phi = float(as_flux(flux))
    n_max = int(cfg.n_max)
    size = cfg.states_per_node
    ej = derive_junction_energies(params)
    ec = charging_matrix(build_capacitance_matrix(params)).entries

    grid = _charge_grid(n_max)
    diag = np.einsum("ia,ab,ib->i", grid, ec, grid)
    ham = sp.diags(diag).tocsr()

    eye = sp.identity(size, format="csr")
    _, cosine, raise_op = single_mode_operators(n_max)
    for slot, ej_i in enumerate((ej.ej1, ej.ej2, ej.ej3, ej.ej4)):
        ops = [eye, eye, eye, eye]
        ops[slot] = cosine
        ham = ham - ej_i * _kron4(ops)

    # JJ5: -ej5 cos(phi4 - phi3 - 2 pi phi_ex) with S4+ S3- = I x I x S- x S+
    hop = _kron4([eye, eye, raise_op.T.tocsr(), raise_op])
    phase = np.exp(-2j * np.pi * phi)
    if abs(phase.imag) < _REAL_PHASE_TOL:
        ham = ham - (ej.ej5 * phase.real / 2.0) * (hop + hop.T)
    else:
        ham = ham.astype(np.complex128) - (ej.ej5 / 2.0) * (phase * hop + np.conj(phase) * hop.T)

    ham = ham.tocsr()
    ham.sum_duplicates()
    return SparseHamiltonian(matrix=ham, n_max=n_max, phi_ex=phi)


def uncoupled_hamiltonian(params: CircuitParams, cfg: ChargeBasisConfig):
    """Single-mode reference Hamiltonians used for dressed-state labeling.

    Mode i is Ec_ii n^2 - ej_i cos(phi); the coupler modes 3 and 4 also carry
    the local quadratic share of JJ5 at zero flux, ej5 * phi^2 / 2, expanded
    as ej5 (1 - cos(phi)) so the reference stays strictly single-mode.
    """
    require_valid(params)
    n_max = int(cfg.n_max)
    size = cfg.states_per_node
    ej = derive_junction_energies(params)
    ec = charging_matrix(build_capacitance_matrix(params)).entries

    _, cosine, _ = single_mode_operators(n_max)
    nsq = np.diag(np.arange(-n_max, n_max + 1, dtype=float) ** 2)
    cos_dense = cosine.toarray()
    modes = []
    for slot in range(4):
        h = ec[slot, slot] * nsq
        ej_i = (ej.ej1, ej.ej2, ej.ej3, ej.ej4)[slot]
        h = h - ej_i * cos_dense
        if slot >= 2:
            h = h + ej.ej5 * (np.eye(size) - cos_dense)
        modes.append(h)
    return tuple(modes)


def dump_operator(ham: SparseHamiltonian, path: str | Path) -> None:
    """Write the operator as coordinate-format text for external cross-checks.

    One header line (dimension, n_max, phi_ex), then one line per stored
    entry: row col re im.
    """
    coo = ham.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    values = coo.data[order].astype(np.complex128)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{ham.dimension} {ham.n_max} {float(ham.phi_ex)!r}\n")
        for row, col, val in zip(coo.row[order], coo.col[order], values):
            handle.write(f"{row} {col} {float(val.real)!r} {float(val.imag)!r}\n")
