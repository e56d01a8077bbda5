"""Two-mode normal-form reduction of the coupler circuit.

Blockwise (nodes 1-3 and 2-4) transforms diagonalize the junction-normalized
capacitance matrices. The resulting qubit modes couple through an effective
shunt capacitance and the JJ5 Josephson energy; this module carries the
closed forms for the qubit frequencies, the transverse coupling rate g12,
the shunt value that cancels it, and the cross-Kerr shift.

All derivations assume zero external flux and drop the parasitic couplings
C12, C14, C23; inputs are used accordingly regardless of their values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .circuit import CircuitParams, derive_junction_energies, require_valid
from .constants import E_CHARGE, FF, GHZ, HBAR, NH
from .errors import ModelError

_TWO_PI = 2.0 * math.pi
_G12_RESIDUAL_FACTOR = 1e-5


@dataclass(frozen=True)
class BlockModes:
    """Normal modes of one capacitive block (13 or 24).

    ``u`` is orthogonal with column 0 the qubit-like eigenvector (dominant
    node-1/node-2 component, positive diagonal); eigen-capacitances in F.
    """

    block: int
    c_qubit: float
    c_coupler: float
    u: np.ndarray
    r_qubit: float
    r_coupler: float


@dataclass(frozen=True)
class EffectiveParams:
    """Transform-weighted couplings: k_Ur, C'34 (F), E'J5, E''J5, E''J1, E''J2 (GHz)."""

    k_ur: float
    c34_eff: float
    ej5_eff: float
    ej5_kerr: float
    ej1_kerr: float
    ej2_kerr: float


@dataclass(frozen=True)
class ModeSystem:
    """Charging matrix W (rad/s), mode frequencies and coupling rate (rad/s)."""

    w: np.ndarray
    omega1: float
    omega2: float
    g12: float


@dataclass(frozen=True)
class PerturbativeResult:
    """Everything the two-mode reduction produces for one parameter set."""

    k_ur: float
    c34_eff: float
    ej5_eff: float
    ej5_kerr: float
    ej1_kerr: float
    ej2_kerr: float
    w: np.ndarray
    omega1: float
    omega2: float
    g12: float
    u12: np.ndarray
    zeta_pert_khz: float


@dataclass(frozen=True)
class ZeroCouplingResult:
    """Fixed point of C34 = 1/(L_J5 w1 w2) with the residual coupling there."""

    c34_star_ff: float
    g12_residual: float
    omega1: float
    omega2: float
    iterations: int


def block_normal_modes(params: CircuitParams, block: int, e_norm_ghz: float | None = None) -> BlockModes:
    """Diagonalize one block of the junction-normalized capacitance matrix.

    The block matrix is [[Cqq + Cm, -Cm], [-Cm, Ccc + Cm + C34]] scaled by
    1/(r_i r_j) with r_qubit = sqrt(EJq/EJ) and r_coupler =
    sqrt((EJc + EJ5)/EJ); EJ is an arbitrary normalization energy
    (default EJ1) that cancels in every observable.
    """
    require_valid(params)
    ej = derive_junction_energies(params)
    if block == 13:
        c_node_q, c_node_c, c_m = params.c11, params.c33, params.c13
        ej_q, ej_c = ej.ej1, ej.ej3
    elif block == 24:
        c_node_q, c_node_c, c_m = params.c22, params.c44, params.c24
        ej_q, ej_c = ej.ej2, ej.ej4
    else:
        raise ValueError(f"block must be 13 or 24, got {block}")
    e_norm = ej.ej1 if e_norm_ghz is None else float(e_norm_ghz)
    if e_norm <= 0:
        raise ModelError(f"normalization energy must be positive, got {e_norm}")

    r_q = math.sqrt(ej_q / e_norm)
    r_c = math.sqrt((ej_c + ej.ej5) / e_norm)
    mat = np.array(
        [
            [(c_node_q + c_m) * FF, -c_m * FF],
            [-c_m * FF, (c_node_c + c_m + params.c34) * FF],
        ]
    )
    scale = np.array([r_q, r_c])
    normalized = mat / np.outer(scale, scale)

    vals, vecs = np.linalg.eigh(normalized)
    qubit_col = int(np.argmax(np.abs(vecs[0, :])))
    coupler_col = 1 - qubit_col
    u = np.column_stack([vecs[:, qubit_col], vecs[:, coupler_col]])
    if u[0, 0] < 0:
        u[:, 0] = -u[:, 0]
    if u[1, 1] < 0:
        u[:, 1] = -u[:, 1]
    c_qubit = float(vals[qubit_col])
    c_coupler = float(vals[coupler_col])
    if c_qubit <= 0 or c_coupler <= 0:
        raise ModelError(f"block {block} produced a non-positive eigen-capacitance")
    return BlockModes(block, c_qubit, c_coupler, u, r_q, r_c)


def effective_parameters(b13: BlockModes, b24: BlockModes, params: CircuitParams) -> EffectiveParams:
    """k_Ur-weighted effective couplings and quartic (Kerr) energies."""
    ej = derive_junction_energies(params)
    k_ur = b13.u[1, 0] * b24.u[1, 0] / (b13.r_coupler * b24.r_coupler)
    return EffectiveParams(
        k_ur=k_ur,
        c34_eff=k_ur * params.c34 * FF,
        ej5_eff=k_ur * ej.ej5,
        ej5_kerr=k_ur**2 * ej.ej5,
        ej1_kerr=ej.ej1 * (b13.u[0, 0] / b13.r_qubit) ** 4,
        ej2_kerr=ej.ej2 * (b24.u[0, 0] / b24.r_qubit) ** 4,
    )


def mode_frequencies_and_g12(
    b13: BlockModes,
    b24: BlockModes,
    eff: EffectiveParams,
    e_norm_ghz: float,
) -> ModeSystem:
    """Qubit-mode frequencies and the transverse coupling rate.

    W comes from the exact 2x2 inverse of M_c = [[C1, -C'34], [-C'34, C2]];
    omega_i = sqrt(8 W_ii wJ) with wJ the normalization energy over hbar.
    """
    mc = np.array(
        [
            [b13.c_qubit, -eff.c34_eff],
            [-eff.c34_eff, b24.c_qubit],
        ]
    )
    det = mc[0, 0] * mc[1, 1] - mc[0, 1] * mc[1, 0]
    if det <= 0 or mc[0, 0] <= 0:
        raise ModelError("two-mode capacitance matrix is not positive definite")
    w = (E_CHARGE**2 / (2.0 * HBAR)) * np.linalg.inv(mc)
    omega_j = float(e_norm_ghz) * GHZ * _TWO_PI
    omega1 = math.sqrt(8.0 * w[0, 0] * omega_j)
    omega2 = math.sqrt(8.0 * w[1, 1] * omega_j)
    ej5_eff_rad = eff.ej5_eff * GHZ * _TWO_PI
    g12 = 0.5 * math.sqrt(omega1 * omega2 / (w[0, 0] * w[1, 1])) * (
        w[0, 1] - 8.0 * ej5_eff_rad * w[0, 0] * w[1, 1] / (omega1 * omega2)
    )
    return ModeSystem(w=w, omega1=omega1, omega2=omega2, g12=g12)


def _diagonalizing_rotation(omega1: float, omega2: float, g12: float) -> np.ndarray:
    """Jacobi rotation diagonalizing [[w1, g], [g, w2]].

    The angle stays in (-pi/4, pi/4] so column 1 remains the mode-1-like
    eigenvector; g = 0 (including the degenerate case) gives the identity.
    """
    if g12 == 0.0:
        theta = 0.0
    elif omega1 == omega2:
        theta = math.copysign(math.pi / 4.0, g12)
    else:
        theta = 0.5 * math.atan(2.0 * g12 / (omega1 - omega2))
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def zz_perturbative(system: ModeSystem, eff: EffectiveParams) -> tuple[float, np.ndarray]:
    """Cross-Kerr coefficient of the dressed modes, as zeta/2pi in kHz.

    zeta is the coefficient of n1 n2 after rotating into the eigenmodes of
    [[w1, g12], [g12, w2]]; each quartic energy enters with the squared
    participations of the rotation matrix.
    """
    u12 = _diagonalizing_rotation(system.omega1, system.omega2, system.g12)
    wj1 = eff.ej1_kerr * GHZ * _TWO_PI
    wj2 = eff.ej2_kerr * GHZ * _TWO_PI
    wj5 = eff.ej5_kerr * GHZ * _TWO_PI
    x1 = 8.0 * system.w[0, 0] / system.omega1
    x2 = 8.0 * system.w[1, 1] / system.omega2
    zeta = (
        -(wj1 / 4.0) * x1**2 * u12[0, 0] ** 2 * u12[0, 1] ** 2
        - (wj2 / 4.0) * x2**2 * u12[1, 0] ** 2 * u12[1, 1] ** 2
        - (wj5 / 4.0) * x1 * x2 * u12[0, 0] ** 2 * u12[1, 1] ** 2
    )
    return zeta / (_TWO_PI * 1e3), u12


def two_mode_reduction(params: CircuitParams, e_norm_ghz: float | None = None) -> PerturbativeResult:
    """Run the whole block-transform pipeline for one parameter set."""
    ej = derive_junction_energies(params)
    e_norm = ej.ej1 if e_norm_ghz is None else float(e_norm_ghz)
    b13 = block_normal_modes(params, 13, e_norm)
    b24 = block_normal_modes(params, 24, e_norm)
    eff = effective_parameters(b13, b24, params)
    system = mode_frequencies_and_g12(b13, b24, eff, e_norm)
    zeta_khz, u12 = zz_perturbative(system, eff)
    return PerturbativeResult(
        k_ur=eff.k_ur,
        c34_eff=eff.c34_eff,
        ej5_eff=eff.ej5_eff,
        ej5_kerr=eff.ej5_kerr,
        ej1_kerr=eff.ej1_kerr,
        ej2_kerr=eff.ej2_kerr,
        w=system.w,
        omega1=system.omega1,
        omega2=system.omega2,
        g12=system.g12,
        u12=u12,
        zeta_pert_khz=zeta_khz,
    )


def shunt_capacitance_for(lj5_h: float, omega1: float, omega2: float) -> float:
    """Closed-form decoupling shunt 1/(L_J5 w1 w2), in farads."""
    return 1.0 / (lj5_h * omega1 * omega2)


def zero_coupling_c34(
    params: CircuitParams,
    *,
    tol_ff: float = 0.01,
    max_iter: int = 100,
) -> ZeroCouplingResult:
    """Self-consistent decoupling shunt capacitance.

    The mode frequencies depend on C34 through the block matrices, so the
    closed form is iterated to a fixed point: C34 <- 1/(L_J5 w1(C34) w2(C34))
    until the step drops below ``tol_ff``. The residual |g12| at the fixed
    point is checked against 1e-5 sqrt(w1 w2); the closed form carries a
    weak-coupling shorthand, so for strongly coupled circuits the result is
    polished against the exact g12 zero before the check.
    """
    require_valid(params)
    lj5_h = derive_junction_energies(params).lj5_nh * NH
    c34 = float(params.c34)
    trace = []
    for iteration in range(1, max_iter + 1):
        result = two_mode_reduction(params.without_parasitics().with_c34(c34))
        c34_new = shunt_capacitance_for(lj5_h, result.omega1, result.omega2) / FF
        delta = abs(c34_new - c34)
        trace.append((iteration, c34_new, delta))
        c34 = c34_new
        if delta < tol_ff:
            break
    else:
        raise ModelError(
            "zero-coupling iteration did not converge; trace (iteration, C34_fF, delta_fF): "
            + ", ".join(f"({i}, {c:.4f}, {d:.2e})" for i, c, d in trace[-5:])
        )

    def g12_at(c34_ff: float) -> float:
        return two_mode_reduction(params.without_parasitics().with_c34(c34_ff)).g12

    final = two_mode_reduction(params.without_parasitics().with_c34(c34))
    residual_tol = _G12_RESIDUAL_FACTOR * math.sqrt(final.omega1 * final.omega2)
    if abs(final.g12) >= residual_tol:
        lo, hi = 0.5 * c34, 2.0 * c34
        g_lo, g_hi = g12_at(lo), g12_at(hi)
        for _ in range(8):
            if g_lo * g_hi <= 0:
                break
            lo, hi = 0.5 * lo, 1.5 * hi
            g_lo, g_hi = g12_at(lo), g12_at(hi)
        if g_lo * g_hi > 0:
            raise ModelError(
                f"cannot bracket the g12 zero around the fixed point {c34:.3f} fF"
            )
        c34 = float(brentq(g12_at, lo, hi, xtol=1e-6))
        final = two_mode_reduction(params.without_parasitics().with_c34(c34))
        residual_tol = _G12_RESIDUAL_FACTOR * math.sqrt(final.omega1 * final.omega2)
        if abs(final.g12) >= residual_tol:
            raise ModelError(
                f"residual coupling |g12|={abs(final.g12):.3e} rad/s remains above "
                f"tolerance {residual_tol:.3e} after polishing"
            )
    return ZeroCouplingResult(
        c34_star_ff=c34,
        g12_residual=final.g12,
        omega1=final.omega1,
        omega2=final.omega2,
        iterations=len(trace),
    )
