"""Non-interacting Green's function G0: dense evaluation and block application."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import PoleProximityError, SingularShiftError
from .ks_model import KsSystem
from .response import POLE_TOL, effective_eta


def g0_denominators(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    omega = complex(omega)
    eta = effective_eta(omega, eta)
    eps = sys.eigenvalues
    if eta == 0.0 and omega.imag == 0.0:
        dist = np.min(np.abs(omega.real - eps))
        if dist < POLE_TOL:
            raise PoleProximityError(f"omega={omega.real:.12g} is {dist:.2e} Ha from a G0 pole")
    sign = np.where(np.arange(sys.n) < sys.n_v, -1.0, 1.0)
    return omega - eps + 1j * eta * sign


def g0_dense(sys: KsSystem, omega: complex, eta: float = 0.0) -> np.ndarray:
    """Time-ordered G0(omega): occupied poles above, unoccupied below the axis."""
    psi = sys.orbitals
    g = (psi / g0_denominators(sys, omega, eta)) @ psi.T
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class GreensEval:
    omega: complex
    eta: float
    matrix: np.ndarray | None = None


def greens_eval(sys: KsSystem, omega: complex, eta: float = 0.0) -> GreensEval:
    return GreensEval(complex(omega), effective_eta(omega, eta), g0_dense(sys, omega, eta))


def _check_shift(energies, z):
    margin = np.min(np.abs(energies - z)) if len(energies) else np.inf
    if margin < POLE_TOL:
        raise SingularShiftError(f"frequency {z:.12g} is {margin:.2e} Ha from a G0 pole")


def g0_apply(sys: KsSystem, omega: complex, eta: float, x) -> np.ndarray:
    """G0(omega) @ X by linear solves with H_KS instead of a spectral sum.

    With ``eta == 0`` one system [omega I - H] Y = X is solved.  With
    ``eta > 0`` the occupied and unoccupied parts are solved separately,
    P_v[(omega - i eta) - H]P_v X1 = P_v X and the P_c analogue with +i eta,
    and X1 + X2 is returned.  If fewer states than grid points are stored,
    the solve is restricted to their span so the result matches g0_dense.
    """
    x = np.asarray(x)
    block = x.ndim == 2
    xb = x if block else x[:, None]
    omega = complex(omega)
    eta = effective_eta(omega, eta)
    ham = sys.hamiltonian()
    n_grid = sys.n_grid
    eye = np.eye(n_grid)
    if eta == 0.0:
        _check_shift(sys.eigenvalues, omega)
        if sys.n == n_grid:
            y = sla.lu_solve(sla.lu_factor(omega * eye - ham), xb)
        else:
            p = sys.orbitals @ sys.orbitals.T
            a = p @ (omega * eye - ham) @ p + (eye - p)
            y = p @ sla.lu_solve(sla.lu_factor(a), p @ xb)
        return y if block else y[:, 0]

    x1, x2 = _split_solve(sys, omega, eta, ham, xb)
    y = x1 + x2
    return y if block else y[:, 0]


def _split_solve(sys, omega, eta, ham, xb):
    eye = np.eye(sys.n_grid)
    p_v = sys.occupied_projector()
    p_c = sys.unoccupied_projector()
    a1 = p_v @ ((omega - 1j * eta) * eye - ham) @ p_v + (eye - p_v)
    a2 = p_c @ ((omega + 1j * eta) * eye - ham) @ p_c + (eye - p_c)
    x1 = p_v @ sla.lu_solve(sla.lu_factor(a1), p_v @ xb)
    x2 = p_c @ sla.lu_solve(sla.lu_factor(a2), p_c @ xb)
    return x1, x2


def g0_apply_split(sys: KsSystem, omega: complex, eta: float, x):
    """The occupied/unoccupied pieces (X1, X2) whose sum is g0_apply for eta > 0."""
    omega = complex(omega)
    eta = effective_eta(omega, eta)
    if eta == 0.0:
        raise ValueError("the projected split needs eta > 0 on the real axis")
    return _split_solve(sys, omega, eta, sys.hamiltonian(), np.asarray(x))
