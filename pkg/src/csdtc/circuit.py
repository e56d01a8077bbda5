"""Four-node coupler circuit: parameters, junction energies, capacitance matrices.

Nodes 1 and 2 are the data transmons; nodes 3 and 4 are the coupler
transmons, joined by junction JJ5 and the shunt capacitance C34. Parameters
carry bench units (fF, nA); derived matrices use SI farads, and energies are
reported as frequencies E/h in GHz.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .constants import E_CHARGE, FF, GHZ, NA, NH, PHI0_REDUCED, PLANCK_H
from .errors import NumericsError, ParameterError

_NODE_FIELDS = ("c11", "c22", "c33", "c44")
_MUTUAL_FIELDS = ("c12", "c13", "c14", "c23", "c24", "c34")
_CURRENT_FIELDS = ("ic1", "ic2", "ic3", "ic4", "ic5")

# mutual capacitance -> (row, col) in the 4x4 node matrix
_MUTUAL_INDEX = {
    "c12": (0, 1),
    "c13": (0, 2),
    "c14": (0, 3),
    "c23": (1, 2),
    "c24": (1, 3),
    "c34": (2, 3),
}

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class CircuitParams:
    """Node capacitances and mutual capacitances in fF, critical currents in nA."""

    c11: float
    c22: float
    c33: float
    c44: float
    c12: float
    c13: float
    c14: float
    c23: float
    c24: float
    c34: float
    ic1: float
    ic2: float
    ic3: float
    ic4: float
    ic5: float

    def with_c34(self, c34_ff: float) -> "CircuitParams":
        return replace(self, c34=c34_ff)

    def without_parasitics(self) -> "CircuitParams":
        """Zero the small cross couplings C12, C14, C23."""
        return replace(self, c12=0.0, c14=0.0, c23=0.0)


@dataclass(frozen=True)
class JunctionEnergies:
    """Josephson energies E_J/h in GHz and the JJ5 inductance in nH."""

    ej1: float
    ej2: float
    ej3: float
    ej4: float
    ej5: float
    lj5_nh: float


@dataclass(frozen=True)
class CapacitanceMatrix:
    """Symmetric positive-definite 4x4 node capacitance matrix in farads."""

    entries: np.ndarray


@dataclass(frozen=True)
class ChargingMatrix:
    """Coefficient matrix of n_i n_j in H/h, i.e. (4e^2/2) C^-1 / h, in GHz."""

    entries: np.ndarray


def _display(field: str) -> str:
    return field.capitalize() if field.startswith("c") else "Ic" + field[2:]


def validate_params(params: CircuitParams) -> list[str]:
    """Return one message per violated invariant; empty means admissible."""
    report = []
    for name in _NODE_FIELDS:
        value = getattr(params, name)
        if not np.isfinite(value) or value <= 0:
            report.append(f"node capacitance {_display(name)} must be strictly positive, got {value}")
    for name in _MUTUAL_FIELDS:
        value = getattr(params, name)
        if not np.isfinite(value) or value < 0:
            report.append(f"mutual capacitance {_display(name)} must be non-negative, got {value}")
    for name in _CURRENT_FIELDS:
        value = getattr(params, name)
        if not np.isfinite(value) or value <= 0:
            report.append(f"critical current {_display(name)} must be strictly positive, got {value}")
    if not report:
        try:
            np.linalg.cholesky(_assemble_capacitance(params))
        except np.linalg.LinAlgError:
            report.append("assembled capacitance matrix is not positive definite")
    return report


def require_valid(params: CircuitParams) -> None:
    report = validate_params(params)
    if report:
        raise ParameterError("; ".join(report))


def derive_junction_energies(params: CircuitParams) -> JunctionEnergies:
    """Josephson energies E_Ji/h = Phi0 Ic_i / (2 pi h) and L_J5 = (Phi0/2pi)/Ic5."""
    ej = []
    for name in _CURRENT_FIELDS:
        ic = getattr(params, name)
        if not np.isfinite(ic) or ic <= 0:
            raise ParameterError(f"critical current {_display(name)} must be strictly positive, got {ic}")
        ej.append(PHI0_REDUCED * (ic * NA) / PLANCK_H / GHZ)
    lj5 = PHI0_REDUCED / (params.ic5 * NA) / NH
    return JunctionEnergies(*ej, lj5_nh=lj5)


def _assemble_capacitance(params: CircuitParams) -> np.ndarray:
    mat = np.zeros((4, 4))
    for name, (i, j) in _MUTUAL_INDEX.items():
        value = getattr(params, name) * FF
        mat[i, j] = -value
        mat[j, i] = -value
    for i, name in enumerate(_NODE_FIELDS):
        # diagonal = own node capacitance plus every mutual touching the node
        mat[i, i] = getattr(params, name) * FF - (mat[i].sum() - mat[i, i])
    return mat


def build_capacitance_matrix(params: CircuitParams) -> CapacitanceMatrix:
    require_valid(params)
    mat = _assemble_capacitance(params)
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("assembled capacitance matrix is not positive definite") from exc
    return CapacitanceMatrix(mat)


def charging_matrix(cmat: CapacitanceMatrix) -> ChargingMatrix:
    """Invert the capacitance matrix into the charging-energy matrix (GHz)."""
    c = np.asarray(cmat.entries, dtype=float)
    cond = np.linalg.cond(c)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NumericsError(f"capacitance matrix is numerically singular (condition number {cond:.3e})")
    ec = (2.0 * E_CHARGE**2 / PLANCK_H) * np.linalg.inv(c) / GHZ
    return ChargingMatrix((ec + ec.T) / 2.0)


def reference_device() -> CircuitParams:
    """Parameter set of the device this package was validated against."""
    return CircuitParams(
        c11=108.0, c22=80.0, c33=90.0, c44=90.0,
        c12=0.002, c13=12.6, c14=0.06, c23=0.06, c24=12.6, c34=30.3,
        ic1=26.7, ic2=26.6, ic3=55.2, ic4=55.2, ic5=11.9,
    )


# --- JSON parameter documents -------------------------------------------------

_JSON_KEYS = {"node_caps_fF", "mutual_caps_fF", "critical_currents_nA"}
_JSON_MUTUAL_KEYS = {"C12": "c12", "C13": "c13", "C14": "c14", "C23": "c23", "C24": "c24", "C34": "c34"}


def params_from_dict(doc: dict) -> CircuitParams:
    """Parse the JSON parameter document; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ParameterError("parameter document must be a JSON object")
    unknown = set(doc) - _JSON_KEYS
    if unknown:
        raise ParameterError(f"unknown keys in parameter document: {sorted(unknown)}")
    missing = _JSON_KEYS - set(doc)
    if missing:
        raise ParameterError(f"missing keys in parameter document: {sorted(missing)}")
    node = doc["node_caps_fF"]
    if not isinstance(node, (list, tuple)) or len(node) != 4:
        raise ParameterError("node_caps_fF must be a list of 4 values")
    currents = doc["critical_currents_nA"]
    if not isinstance(currents, (list, tuple)) or len(currents) != 5:
        raise ParameterError("critical_currents_nA must be a list of 5 values")
    mutual = doc["mutual_caps_fF"]
    if not isinstance(mutual, dict):
        raise ParameterError("mutual_caps_fF must be an object")
    unknown = set(mutual) - set(_JSON_MUTUAL_KEYS)
    if unknown:
        raise ParameterError(f"unknown keys in mutual_caps_fF: {sorted(unknown)}")
    missing = set(_JSON_MUTUAL_KEYS) - set(mutual)
    if missing:
        raise ParameterError(f"missing keys in mutual_caps_fF: {sorted(missing)}")
    kwargs = dict(zip(_NODE_FIELDS, (float(v) for v in node)))
    kwargs.update({field: float(mutual[key]) for key, field in _JSON_MUTUAL_KEYS.items()})
    kwargs.update(dict(zip(_CURRENT_FIELDS, (float(v) for v in currents))))
    return CircuitParams(**kwargs)


def params_to_dict(params: CircuitParams) -> dict:
    values = asdict(params)
    return {
        "node_caps_fF": [values[name] for name in _NODE_FIELDS],
        "mutual_caps_fF": {key: values[field] for key, field in _JSON_MUTUAL_KEYS.items()},
        "critical_currents_nA": [values[name] for name in _CURRENT_FIELDS],
    }


def load_params(path: str | Path) -> CircuitParams:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"cannot parse parameter file {path}: {exc}") from exc
    return params_from_dict(doc)


def save_params(params: CircuitParams, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(params_to_dict(params), handle, indent=2)
        handle.write("\n")
