"""Pole structure of W_p (Casida/RPA), delta_W and residue-free frequencies.

The RPA coupling is ``K = 2 Phi^T v Phi``: the factor 2 is the spin factor
carried by chi0, and with it the positive eigenvalues of

    H_c = [[D + K, K], [-K, -(D + K)]]

are exactly the poles of W_p = v chi v.  The reduced symmetric problem
``D^2 + 2 D^{1/2} K D^{1/2}`` has the squared poles as eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, PoleOnPathError, ResidueOverlapError
from .ks_model import HARTREE_TO_EV, KsSystem, transition_densities, transition_energies
from .response import SPIN

CASIDA_BUDGET = 20000
PATH_TOL = 1e-8

# plotting offsets for pole maps (0.01 eV for G0, 0.02 eV for W_p)
ETA_G0_PLOT = 0.01 / HARTREE_TO_EV
ETA_WP_PLOT = 0.02 / HARTREE_TO_EV


@dataclass(frozen=True)
class CasidaSpectrum:
    """Excitation energies and pole strengths: W_p(w) = sum_s b_s b_s^T [1/(w-O_s) - 1/(w+O_s)]."""

    omegas: np.ndarray
    amplitudes: np.ndarray

    def wp(self, omega: complex) -> np.ndarray:
        """W_p rebuilt from its pole expansion."""
        omega = complex(omega)
        c = 1.0 / (omega - self.omegas) - 1.0 / (omega + self.omegas)
        b = self.amplitudes
        return (b * c) @ b.T


def casida_kernel(sys: KsSystem):
    """D (as a vector) and the spin-summed coupling K = 2 Phi^T v Phi."""
    phi = transition_densities(sys)
    return transition_energies(sys), SPIN * (phi.T @ sys.coulomb @ phi), phi


def reduced_casida_matrix(sys: KsSystem) -> np.ndarray:
    d, k, _ = casida_kernel(sys)
    sd = np.sqrt(d)
    m = np.diag(d**2) + 2.0 * sd[:, None] * k * sd[None, :]
    return 0.5 * (m + m.T)


def full_casida_matrix(sys: KsSystem) -> np.ndarray:
    """The 2 n_v n_c dimensional non-Hermitian H_c."""
    d, k, _ = casida_kernel(sys)
    a = np.diag(d) + k
    return np.block([[a, k], [-k, -a]])


def casida_full(sys: KsSystem, budget: int = CASIDA_BUDGET) -> CasidaSpectrum:
    """Solve the Casida problem densely; returns ascending poles and amplitudes."""
    size = sys.n_v * sys.n_c
    if size > budget:
        raise BudgetError(f"n_v*n_c = {size} exceeds the dense Casida budget {budget}")
    d, k, phi = casida_kernel(sys)
    sd = np.sqrt(d)
    m = np.diag(d**2) + 2.0 * sd[:, None] * k * sd[None, :]
    lam, z = np.linalg.eigh(0.5 * (m + m.T))
    omegas = np.sqrt(np.clip(lam, 0.0, None))
    if np.any(omegas <= 0):
        raise np.linalg.LinAlgError("non-positive Casida eigenvalue")
    # W_p = v Phi X Phi^T v with X = 2 D^{1/2} Z diag(2 / (w^2 - O^2)) Z^T D^{1/2}
    amps = (sys.coulomb @ phi) @ (sd[:, None] * z) * np.sqrt(SPIN / omegas)[None, :]
    return CasidaSpectrum(omegas, amps)


def delta_w(sys: KsSystem, spectrum: CasidaSpectrum | None = None) -> float:
    """Smallest positive pole of W_p (distance of its poles from the imaginary axis)."""
    if spectrum is None:
        lam = np.linalg.eigvalsh(reduced_casida_matrix(sys))[0]
        return float(np.sqrt(max(lam, 0.0)))
    return float(spectrum.omegas[0])


@dataclass(frozen=True)
class ResidueFreeReport:
    omega: float
    delta_w: float
    lb: float
    ub: float
    is_residue_free: bool
    suggested_shift: float | None


def residue_free(sys: KsSystem, omega: float, delta_w: float) -> ResidueFreeReport:
    """Bounds of the pole-free vertical strip for G0(omega + w') W_p(w')."""
    lb = max(-delta_w, sys.homo - omega)
    ub = min(sys.lumo - omega, delta_w)
    ok = lb < ub
    return ResidueFreeReport(float(omega), float(delta_w), lb, ub, ok, 0.5 * (lb + ub) if ok else None)


@dataclass(frozen=True)
class EnclosedPole:
    """A G0 pole z = eps_j - omega trapped between the real axis and the path.

    ``coefficient`` multiplies rho_ij^T W_p(z) rho_ij in the correction:
    -1 for occupied poles right of the path, +1 for unoccupied poles left of it.
    """

    state: int
    z: float
    coefficient: int


def enclosed_g0_poles(sys: KsSystem, omega: float, shift: float) -> list[EnclosedPole]:
    """G0(omega + w') poles enclosed by the real axis and the line Re w' = shift.

    Occupied poles sit just above the axis and are enclosed when they lie to
    the right of the path; unoccupied poles sit just below and are enclosed
    when they lie to its left.
    """
    z = sys.eigenvalues - omega
    dist = np.min(np.abs(z - shift))
    if dist < PATH_TOL:
        raise PoleOnPathError(f"shift {shift:.12g} is {dist:.2e} Ha from a G0 pole")
    out = []
    for j in range(sys.n):
        if j < sys.n_v and z[j] > shift:
            out.append(EnclosedPole(j + 1, float(z[j]), -1))
        elif j >= sys.n_v and z[j] < shift:
            out.append(EnclosedPole(j + 1, float(z[j]), +1))
    return out


def check_wp_clearance(shift: float, delta: float) -> None:
    """The path must keep all W_p poles outside the enclosed region."""
    if abs(shift) > delta - PATH_TOL:
        raise PoleOnPathError(
            f"|shift|={abs(shift):.6g} reaches the W_p poles at +-{delta:.6g}; "
            "only G0 residues are supported"
        )


def check_residue_overlap(poles: list[EnclosedPole], spectrum: CasidaSpectrum) -> None:
    for p in poles:
        dist = np.min(np.abs(np.abs(p.z) - spectrum.omegas))
        if dist < PATH_TOL:
            raise ResidueOverlapError(
                f"residue point z={p.z:.12g} (state {p.state}) is {dist:.2e} Ha from a W_p pole"
            )


def auto_shift(sys: KsSystem, omega: float, delta: float) -> float:
    """Midpoint of the residue-free strip, else the point of (-delta, delta)
    farthest from every G0 pole real part."""
    rep = residue_free(sys, omega, delta)
    if rep.is_residue_free:
        return rep.suggested_shift
    z = sys.eigenvalues - omega
    cuts = np.concatenate(([-delta, delta], z[(z > -delta) & (z < delta)]))
    cuts = np.unique(cuts)
    gaps = np.diff(cuts)
    best = int(np.argmax(gaps))
    return float(0.5 * (cuts[best] + cuts[best + 1]))


def pole_map(sys: KsSystem, omega: float, spectrum: CasidaSpectrum | None = None):
    """Rows (re, im, kind) for the poles of G0(omega + w') and W_p(w')."""
    spectrum = spectrum or casida_full(sys)
    rows = []
    z = sys.eigenvalues - omega
    for j, zj in enumerate(z):
        if j < sys.n_v:
            rows.append((float(zj), ETA_G0_PLOT, "g0_occ"))
        else:
            rows.append((float(zj), -ETA_G0_PLOT, "g0_unocc"))
    for om in spectrum.omegas:
        rows.append((float(om), -ETA_WP_PLOT, "wp_pos"))
    for om in spectrum.omegas:
        rows.append((float(-om), ETA_WP_PLOT, "wp_neg"))
    return rows
