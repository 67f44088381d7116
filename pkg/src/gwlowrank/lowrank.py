"""Rank-k approximations of W_p and the associated error bounds.

Four schemes are provided:

SVD_WP         truncated SVD of W_p itself (2-norm optimal)
SVD_VCHI       truncated SVD of v chi, right factor multiplied by v
SVD_VCHI0_SMW  truncated SVD of v chi0, turned into W_p by Sherman-Morrison-Woodbury
FOURIER_TRUNC  keep the k plane waves with the largest diagonal of F^* v F

Every factor represents W_p ~ U S V^*.  SVDs are dense LAPACK SVDs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SingularCoreError
from .greens import g0_dense
from .ks_model import KsSystem
from .response import _solve, chi0_dense, wp_dense

CORE_COND_MAX = 1e12


class Scheme(str, enum.Enum):
    DENSE = "DENSE"
    SVD_WP = "SVD_WP"
    SVD_VCHI = "SVD_VCHI"
    SVD_VCHI0_SMW = "SVD_VCHI0_SMW"
    FOURIER_TRUNC = "FOURIER_TRUNC"

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        aliases = {"SMW_VCHI0": "SVD_VCHI0_SMW", "SMW": "SVD_VCHI0_SMW", "FOURIER": "FOURIER_TRUNC"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class LowRankFactor:
    scheme: Scheme
    omega: complex
    k: int
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def dense(self) -> np.ndarray:
        return self.U @ self.S @ self.V.conj().T


class Screening:
    """Dense operators at one frequency, with SVDs computed on demand."""

    def __init__(self, sys: KsSystem, omega: complex):
        self.sys = sys
        self.omega = complex(omega)
        v = sys.coulomb
        self.chi0 = chi0_dense(sys, omega)
        self.vchi0 = v @ self.chi0
        self.epsilon = np.eye(sys.n_grid) - self.vchi0
        # v chi = eps^{-1} - I = eps^{-1} v chi0
        self.vchi = _solve(self.epsilon, self.vchi0, "epsilon")
        wp = self.vchi @ v
        self.wp = 0.5 * (wp + wp.T)

    @cached_property
    def svd_wp(self):
        return np.linalg.svd(self.wp)

    @cached_property
    def svd_vchi(self):
        return np.linalg.svd(self.vchi)

    @cached_property
    def svd_vchi0(self):
        return np.linalg.svd(self.vchi0)

    @cached_property
    def eps_inv_norm(self) -> float:
        return 1.0 / np.linalg.svd(self.epsilon, compute_uv=False)[-1]

    @cached_property
    def v_norm(self) -> float:
        return float(np.linalg.norm(self.sys.coulomb, 2))


def _check_rank(sys, k):
    if not 1 <= k <= sys.n_grid:
        raise ValueError(f"rank k={k} outside 1..{sys.n_grid}")


def _truncate(svd, k):
    u, s, vh = svd
    return u[:, :k], s[:k], vh[:k].conj().T


def svd_wp(sys: KsSystem, omega: complex, k: int, snap: Screening | None = None) -> LowRankFactor:
    """Best rank-k approximation of W_p in the 2-norm."""
    _check_rank(sys, k)
    snap = snap or Screening(sys, omega)
    u, s, v = _truncate(snap.svd_wp, k)
    return LowRankFactor(Scheme.SVD_WP, complex(omega), k, u, np.diag(s).astype(complex), v)


def svd_vchi(sys: KsSystem, omega: complex, k: int, snap: Screening | None = None) -> LowRankFactor:
    """W_p ~ U_k S_k (v V_k)^* from the truncated SVD of v chi."""
    _check_rank(sys, k)
    snap = snap or Screening(sys, omega)
    u, s, v = _truncate(snap.svd_vchi, k)
    return LowRankFactor(Scheme.SVD_VCHI, complex(omega), k, u, np.diag(s).astype(complex), sys.coulomb @ v)


def smw_vchi0(sys: KsSystem, omega: complex, k: int, snap: Screening | None = None) -> LowRankFactor:
    """W_p ~ U O^{-1} (v V)^* with v chi0 ~ U S V^* and O = S^{-1} - V^* U.

    O^{-1} is formed as S (I - V^* U S)^{-1}, which is the same matrix but
    stays defined when trailing singular values vanish.
    """
    _check_rank(sys, k)
    snap = snap or Screening(sys, omega)
    u, s, v = _truncate(snap.svd_vchi0, k)
    core = np.eye(k) - (v.conj().T @ u) * s[None, :]
    cond = np.linalg.cond(core)
    if not np.isfinite(cond) or cond > CORE_COND_MAX:
        raise SingularCoreError(f"SMW core matrix has condition number {cond:.3e} at omega={omega}")
    middle = s[:, None] * np.linalg.inv(core)
    return LowRankFactor(Scheme.SVD_VCHI0_SMW, complex(omega), k, u, middle, sys.coulomb @ v)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix whose columns are plane waves exp(2 pi i a b / n) / sqrt(n)."""
    idx = np.arange(n)
    return np.exp(2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def fourier_modes(sys: KsSystem, k: int):
    """Indices of the k largest diagonal entries of F^* v F (ties: lower index)."""
    f = dft_matrix(sys.n_grid)
    vhat = np.real(np.einsum("ab,ac,cb->b", f.conj(), sys.coulomb, f))
    order = np.argsort(-vhat, kind="stable")
    return f, vhat, np.sort(order[:k])


def fourier_trunc(sys: KsSystem, omega: complex, k: int, snap: Screening | None = None) -> LowRankFactor:
    """Reciprocal-space truncation of v, W_p ~ (F_t v_t) [chi0_t^{-1} - v_t]^{-1} (F_t v_t)^*.

    The middle factor is evaluated as chi0_t [I - v_t chi0_t]^{-1} so chi0_t
    itself is never inverted.
    """
    _check_rank(sys, k)
    chi0 = snap.chi0 if snap is not None else chi0_dense(sys, omega)
    f, vhat, sel = fourier_modes(sys, k)
    ft = f[:, sel]
    vt = vhat[sel]
    chi0_t = ft.conj().T @ chi0 @ ft
    core = np.eye(k) - vt[:, None] * chi0_t
    cond = np.linalg.cond(core)
    if not np.isfinite(cond) or cond > CORE_COND_MAX:
        raise SingularCoreError(f"Fourier core matrix has condition number {cond:.3e}")
    middle = np.linalg.solve(core.T, chi0_t.T).T
    w = ft * vt[None, :]
    return LowRankFactor(Scheme.FOURIER_TRUNC, complex(omega), k, w, middle, w)


BUILDERS = {
    Scheme.SVD_WP: svd_wp,
    Scheme.SVD_VCHI: svd_vchi,
    Scheme.SVD_VCHI0_SMW: smw_vchi0,
    Scheme.FOURIER_TRUNC: fourier_trunc,
}


def low_rank_factor(sys, scheme, omega, k, snap=None) -> LowRankFactor:
    return BUILDERS[Scheme.parse(scheme)](sys, omega, k, snap)


def singular_value_profile(sys: KsSystem, omega: complex) -> dict:
    """Normalized singular values of W_p (= v chi v), v chi0 and v chi."""
    snap = Screening(sys, omega)
    out = {}
    for name, mat in (("wp", snap.wp), ("vchi0", snap.vchi0), ("vchi", snap.vchi)):
        s = np.linalg.svd(mat, compute_uv=False)
        out[name] = s / s[0] if s[0] > 0 else s
    return out


@dataclass(frozen=True)
class ErrorBounds:
    e1: float
    e2: float
    e3: float
    e3_valid: bool

    def for_scheme(self, scheme) -> float | None:
        scheme = Scheme.parse(scheme)
        if scheme is Scheme.SVD_WP:
            return self.e1
        if scheme is Scheme.SVD_VCHI:
            return self.e2
        if scheme is Scheme.SVD_VCHI0_SMW:
            return self.e3 if self.e3_valid else None
        return None


def _sigma_next(svals, k):
    return float(svals[k]) if k < len(svals) else 0.0


def error_bounds(
    sys: KsSystem,
    omega_prime: complex,
    k: int,
    omega: float = 0.0,
    snap: Screening | None = None,
    g0_norm: float | None = None,
) -> ErrorBounds:
    """Bounds E1..E3 on the integrand error at w' for rank k.

    ||G0|| is the spectral norm of G0(omega + w').  E3 only holds while
    ||eps^{-1}|| sigma_{k+1}(v chi0) <= 1/2, which ``e3_valid`` reports.
    """
    snap = snap or Screening(sys, omega_prime)
    if g0_norm is None:
        g0_norm = float(np.linalg.norm(g0_dense(sys, complex(omega) + complex(omega_prime)), 2))
    s_wp = _sigma_next(snap.svd_wp[1], k)
    s_vchi = _sigma_next(snap.svd_vchi[1], k)
    s_vchi0 = _sigma_next(snap.svd_vchi0[1], k)
    e1 = s_wp * g0_norm
    e2 = s_vchi * snap.v_norm * g0_norm
    e3 = 2.0 * s_vchi0 * snap.eps_inv_norm**2 * snap.v_norm * g0_norm
    return ErrorBounds(e1, e2, e3, bool(snap.eps_inv_norm * s_vchi0 <= 0.5))


def projected_factor(basis: LowRankFactor, wp: np.ndarray, omega: complex) -> LowRankFactor:
    """Reuse the singular subspaces of ``basis`` (e.g. W_p(0)) at another frequency:
    W_p(w) ~ U (U^* W_p(w) V) V^*."""
    u, v = basis.U, basis.V
    middle = u.conj().T @ wp @ v
    return LowRankFactor(basis.scheme, complex(omega), basis.k, u, middle, v)


def make_provider(sys: KsSystem, scheme="DENSE", k: int | None = None, basis_omega: complex | None = None):
    """Callable w' -> W_p(w') (dense array) or its rank-k factor.

    With ``basis_omega`` set (SVD_WP only) the rank-k singular subspaces at
    that frequency are computed once and reused at every other frequency.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.DENSE:
        return lambda w: wp_dense(sys, w)
    if k is None:
        raise ValueError(f"scheme {scheme.value} needs a rank")
    k = int(k)
    if basis_omega is not None:
        if scheme is not Scheme.SVD_WP:
            raise ValueError("subspace reuse is only defined for SVD_WP")
        basis = svd_wp(sys, basis_omega, k)
        return lambda w: projected_factor(basis, Screening(sys, w).wp, w)
    build = BUILDERS[scheme]
    return lambda w: build(sys, w, k)
