"""Discrete Kohn-Sham ground states: data model, KSD bundles, 1D model molecules.

Grid weights are folded into the stored orbitals, so every inner product in
the package is a plain dot product.  The Coulomb matrix holds kernel values
``v(x_i, x_j)``; with weight-folded orbitals the pair densities carry the
remaining quadrature weight and all contractions come out correctly scaled.

State indices in the public API are 1-based (``i = 1`` is the lowest state),
matching the usual HOMO/LUMO labelling.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, GapDegeneracyError, InvariantError

HARTREE_TO_EV = 27.211386245988

ORTHO_TOL = 1e-12
PSD_TOL = 1e-12
GAP_TOL = 1e-10

KSD_FORMAT_VERSION = 1


def _frozen(a, dtype=float):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class KsSystem:
    """Kohn-Sham eigenpairs on a real-space grid plus the bare Coulomb matrix.

    Attributes
    ----------
    eigenvalues : (n,) array
        Kohn-Sham energies in Hartree, ascending.
    orbitals : (n_grid, n) array
        Orthonormal orbitals (weights folded in), one per column.
    coulomb : (n_grid, n_grid) array
        Symmetric positive semidefinite bare Coulomb matrix.
    n_v : int
        Number of occupied states.
    vxc_element : (n,) array or None
        Diagonal elements <psi_i|V_xc|psi_i> in Hartree.
    """

    eigenvalues: np.ndarray
    orbitals: np.ndarray
    coulomb: np.ndarray
    n_v: int
    vxc_element: np.ndarray | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "orbitals", _frozen(self.orbitals))
        object.__setattr__(self, "coulomb", _frozen(self.coulomb))
        object.__setattr__(self, "n_v", int(self.n_v))
        if self.vxc_element is not None:
            object.__setattr__(self, "vxc_element", _frozen(self.vxc_element))
        validate(self)

    @property
    def n_grid(self) -> int:
        return self.orbitals.shape[0]

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_c(self) -> int:
        return self.n - self.n_v

    @property
    def homo(self) -> float:
        return float(self.eigenvalues[self.n_v - 1])

    @property
    def lumo(self) -> float:
        return float(self.eigenvalues[self.n_v])

    @property
    def gap(self) -> float:
        return self.lumo - self.homo

    @property
    def midgap(self) -> float:
        return 0.5 * (self.homo + self.lumo)

    @property
    def occupied(self) -> np.ndarray:
        return self.orbitals[:, : self.n_v]

    @property
    def unoccupied(self) -> np.ndarray:
        return self.orbitals[:, self.n_v :]

    def hamiltonian(self) -> np.ndarray:
        """H_KS rebuilt from the eigenpairs as Psi diag(eps) Psi^T."""
        psi = self.orbitals
        h = (psi * self.eigenvalues) @ psi.T
        return 0.5 * (h + h.T)

    def occupied_projector(self) -> np.ndarray:
        return self.occupied @ self.occupied.T

    def unoccupied_projector(self) -> np.ndarray:
        """Projector onto the unoccupied states; equals I - P_v when n == n_grid."""
        return self.unoccupied @ self.unoccupied.T

    def state_index(self, state) -> int:
        """Resolve ``'homo'``, ``'lumo'`` or a 1-based integer to a 1-based index."""
        if isinstance(state, str):
            key = state.strip().lower()
            if key == "homo":
                return self.n_v
            if key == "lumo":
                return self.n_v + 1
            state = int(key)
        state = int(state)
        if not 1 <= state <= self.n:
            raise IndexError(f"state index {state} outside 1..{self.n}")
        return state

    def with_coulomb(self, coulomb) -> "KsSystem":
        return dataclasses.replace(self, coulomb=coulomb)

    def with_vxc(self, vxc) -> "KsSystem":
        return dataclasses.replace(self, vxc_element=vxc)


def validate(sys: KsSystem) -> None:
    """Raise InvariantError/GapDegeneracyError naming the first failing check."""
    eps, psi, v = sys.eigenvalues, sys.orbitals, sys.coulomb
    if eps.ndim != 1:
        raise InvariantError("eigenvalues must be a vector")
    if psi.ndim != 2 or psi.shape[1] != eps.shape[0]:
        raise InvariantError(f"orbitals shape {psi.shape} does not match n={eps.shape[0]}")
    n_grid, n = psi.shape
    if n > n_grid:
        raise InvariantError(f"n={n} states exceed n_grid={n_grid}")
    if v.shape != (n_grid, n_grid):
        raise InvariantError(f"coulomb shape {v.shape} does not match n_grid={n_grid}")
    if not 0 < sys.n_v < n:
        raise InvariantError(f"n_v={sys.n_v} must satisfy 0 < n_v < n={n}")
    if not (np.all(np.isfinite(eps)) and np.all(np.isfinite(psi)) and np.all(np.isfinite(v))):
        raise InvariantError("non-finite values in eigenvalues, orbitals or coulomb")
    if np.any(np.diff(eps) < 0):
        raise InvariantError("eigenvalues are not nondecreasing")
    ortho = np.max(np.abs(psi.T @ psi - np.eye(n)))
    if ortho > ORTHO_TOL:
        raise InvariantError(f"orbitals not orthonormal: max|Psi^T Psi - I| = {ortho:.3e}")
    if not np.array_equal(v, v.T):
        raise InvariantError("coulomb symmetry violated: v != v^T")
    scale = np.linalg.norm(v, 2) if n_grid else 0.0
    lam_min = np.linalg.eigvalsh(v)[0]
    if lam_min < -PSD_TOL * scale:
        raise InvariantError(f"coulomb not positive semidefinite: lambda_min = {lam_min:.3e}")
    if sys.vxc_element is not None and sys.vxc_element.shape != (n,):
        raise InvariantError(f"vxc_element shape {sys.vxc_element.shape} != ({n},)")
    if eps[sys.n_v] - eps[sys.n_v - 1] < GAP_TOL:
        raise GapDegeneracyError(
            f"HOMO-LUMO gap {eps[sys.n_v] - eps[sys.n_v - 1]:.3e} Ha below {GAP_TOL:g}"
        )


def pair_density(sys: KsSystem, i: int, j: int) -> np.ndarray:
    """rho_ij = psi_i * psi_j (elementwise), 1-based indices."""
    for idx in (i, j):
        if not 1 <= idx <= sys.n:
            raise IndexError(f"state index {idx} outside 1..{sys.n}")
    return sys.orbitals[:, i - 1] * sys.orbitals[:, j - 1]


def transition_densities(sys: KsSystem) -> np.ndarray:
    """Matrix Phi whose columns are rho_ij, i occupied, j unoccupied, i-major order."""
    occ, unocc = sys.occupied, sys.unoccupied
    phi = occ[:, :, None] * unocc[:, None, :]
    return phi.reshape(sys.n_grid, sys.n_v * sys.n_c)


def transition_energies(sys: KsSystem) -> np.ndarray:
    """Delta_ij = eps_j - eps_i in the same order as transition_densities."""
    eps = sys.eigenvalues
    return (eps[None, sys.n_v :] - eps[: sys.n_v, None]).ravel()


# --------------------------------------------------------------------------
# KSD bundles


def save_ksd(sys: KsSystem, path) -> Path:
    """Write ``sys`` as a KSD bundle directory (manifest + float64 blobs)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": KSD_FORMAT_VERSION,
        "n_grid": sys.n_grid,
        "n": sys.n,
        "n_v": sys.n_v,
        "has_vxc": sys.vxc_element is not None,
        "units": "hartree",
    }
    blobs = {
        "eigenvalues.f64": sys.eigenvalues,
        "orbitals.f64": sys.orbitals.ravel(order="F"),
        "coulomb.f64": sys.coulomb.ravel(order="F"),
    }
    if sys.vxc_element is not None:
        blobs["vxc.f64"] = sys.vxc_element
    for name, data in blobs.items():
        _atomic_write(path / name, np.asarray(data, dtype="<f8").tobytes())
    _atomic_write(path / "manifest.json", (json.dumps(manifest, indent=2) + "\n").encode())
    return path


def load_ksd(path) -> KsSystem:
    """Read a KSD bundle; raises on missing files, size mismatch or bad invariants."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"missing KSD manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != KSD_FORMAT_VERSION:
        raise InvariantError(f"unsupported KSD format_version {manifest.get('format_version')!r}")
    if manifest.get("units", "hartree") != "hartree":
        raise InvariantError(f"unsupported units {manifest.get('units')!r}")
    n_grid, n, n_v = int(manifest["n_grid"]), int(manifest["n"]), int(manifest["n_v"])

    def blob(name, count):
        f = path / name
        if not f.is_file():
            raise FileNotFoundError(f"missing KSD blob: {f}")
        raw = f.read_bytes()
        if len(raw) != 8 * count:
            raise DimensionMismatchError(
                f"{name}: {len(raw)} bytes, manifest implies {8 * count}"
            )
        return np.frombuffer(raw, dtype="<f8").astype(float)

    eps = blob("eigenvalues.f64", n)
    psi = blob("orbitals.f64", n_grid * n).reshape((n_grid, n), order="F")
    v = blob("coulomb.f64", n_grid * n_grid).reshape((n_grid, n_grid), order="F")
    vxc = blob("vxc.f64", n) if manifest.get("has_vxc", False) else None
    return KsSystem(eps, psi, v, n_v, vxc, label=str(path))


def _atomic_write(target: Path, data: bytes) -> None:
    tmp = target.with_name(target.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, target)


# --------------------------------------------------------------------------
# synthetic 1D molecules


@dataclass(frozen=True)
class ModelSpec:
    """Periodic 1D model molecule: Gaussian wells + soft-Coulomb interaction."""

    n_grid: int = 64
    box_length: float = 16.0
    well_depths: tuple = (4.0,)
    well_centers: tuple = (8.0,)
    well_widths: tuple = (1.2,)
    soft_core: float = 1.0
    n_v: int = 2

    def __post_init__(self):
        for name in ("well_depths", "well_centers", "well_widths"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.n_grid < 8:
            raise ValueError("n_grid must be >= 8")
        if self.soft_core <= 0:
            raise ValueError("soft_core must be > 0")
        if not 0 < self.n_v < self.n_grid:
            raise ValueError("n_v must satisfy 0 < n_v < n_grid")
        if not len(self.well_depths) == len(self.well_centers) == len(self.well_widths):
            raise ValueError("well_depths, well_centers and well_widths differ in length")
        if any(w <= 0 for w in self.well_widths):
            raise ValueError("well widths must be > 0")
        if self.box_length <= 0:
            raise ValueError("box_length must be > 0")

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown ModelSpec fields: {sorted(unknown)}")
        return cls(**data)


def grid(spec: ModelSpec) -> np.ndarray:
    h = spec.box_length / spec.n_grid
    return np.arange(spec.n_grid) * h


def laplacian_spectrum(n_grid: int, h: float) -> np.ndarray:
    """Eigenvalues of the periodic second-order FD operator -d^2/dx^2, ascending."""
    k = np.arange(n_grid)
    return np.sort(2.0 * (1.0 - np.cos(2.0 * np.pi * k / n_grid)) / h**2)


def soft_coulomb(spec: ModelSpec) -> np.ndarray:
    """Circulant soft-Coulomb matrix, projected onto the PSD cone.

    The minimum-image kernel 1/sqrt(d^2 + a^2) is circulant but can have a few
    slightly negative Fourier modes; those are clipped to zero.
    """
    n, L = spec.n_grid, spec.box_length
    x = grid(spec)
    d = np.minimum(x, L - x)
    row = 1.0 / np.sqrt(d**2 + spec.soft_core**2)
    lam = np.fft.fft(row).real  # symmetric circulant => real spectrum
    lam = np.clip(lam, 0.0, None)
    row = np.fft.ifft(lam).real
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    v = row[idx]
    return 0.5 * (v + v.T)


def model_hamiltonian(spec: ModelSpec) -> np.ndarray:
    n = spec.n_grid
    h = spec.box_length / n
    x = grid(spec)
    lap = np.diag(np.full(n, 2.0)) - np.eye(n, k=1) - np.eye(n, k=-1)
    lap[0, -1] = lap[-1, 0] = -1.0
    ham = lap / h**2
    pot = np.zeros(n)
    L = spec.box_length
    for depth, center, width in zip(spec.well_depths, spec.well_centers, spec.well_widths):
        dx = x - center
        dx = dx - L * np.round(dx / L)
        pot -= depth * np.exp(-0.5 * (dx / width) ** 2)
    ham[np.diag_indices(n)] += pot
    return ham


def build_model_1d(spec: ModelSpec | None = None) -> KsSystem:
    """Diagonalize the model Hamiltonian and pair it with the soft-Coulomb matrix."""
    spec = spec or ModelSpec()
    eps, psi = np.linalg.eigh(model_hamiltonian(spec))
    if eps[spec.n_v] - eps[spec.n_v - 1] < GAP_TOL:
        raise GapDegeneracyError(
            f"model HOMO-LUMO gap {eps[spec.n_v] - eps[spec.n_v - 1]:.3e} Ha is degenerate"
        )
    # fix the sign of each orbital so results do not depend on LAPACK's choice
    pivot = np.argmax(np.abs(psi), axis=0)
    psi = psi * np.sign(psi[pivot, np.arange(psi.shape[1])])
    return KsSystem(eps, psi, soft_coulomb(spec), spec.n_v, label="model1d")


def sys2(coulomb=None, vxc=None) -> KsSystem:
    """Two-state, two-point hand-checkable system used throughout the tests."""
    s = 1.0 / np.sqrt(2.0)
    psi = s * np.array([[1.0, 1.0], [1.0, -1.0]])
    v = np.array([[1.0, 0.5], [0.5, 1.0]]) if coulomb is None else coulomb
    return KsSystem(np.array([-0.5, 0.5]), psi, v, 1, vxc, label="SYS2")
