"""Model spectral densities built from a few interacting lossy modes.

The environment model is a set of N discrete bosonic modes with a real
symmetric energy/coupling matrix ``omega`` (eV), per-mode loss rates
``kappa`` (eV), and per-mode emitter couplings ``g`` (eV, transition dipole
folded in).  Everything in this module derives from the non-Hermitian
effective matrix

    H_ij = omega_ij - (i/2) kappa_i delta_ij

whose resolvent defines the model spectral density

    J(w) = (1/pi) Im[ g^T (H - w I)^(-1) g ].

Two evaluation routes are implemented and cross-validated: a linear solve
per frequency, and a pole expansion obtained from the complex-symmetric
eigendecomposition of H.  The Lorentzian closed form for diagonal ``omega``
and the Purcell enhancement relative to free space round out the module.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import free_space_spectral_density
from .errors import CoverageWarning, DataWarning, NumericalError, ValidationError
from .tolerances import DEFAULT_TOLERANCES, Tolerances

__all__ = [
    "ModelParameters",
    "EffectiveHamiltonian",
    "SpectralDensityTable",
    "PoleSet",
    "build_effective_hamiltonian",
    "evaluate_jmod",
    "evaluate_lorentzian_sum",
    "compute_poles",
    "purcell_factor",
]

# grid-size threshold beyond which the pole-sum path is preferred
_POLE_PATH_GRID = 10_000
# mode-count threshold beyond which the pole-sum path is preferred
_POLE_PATH_MODES = 8
# frequency chunk for batched linear solves (bounds peak memory)
_SOLVE_CHUNK = 4096


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelParameters:
    """Parameters of a few-mode lossy environment.

    Attributes
    ----------
    omega : ndarray, shape (N, N)
        Real symmetric mode energy/coupling matrix in eV.  Diagonal entries
        are mode energies, off-diagonal entries mode-mode couplings.
        Symmetry must be exact (bitwise), not approximate.
    kappa : ndarray, shape (N,)
        Mode loss rates in eV, strictly positive.
    g : ndarray, shape (N,)
        Emitter-mode couplings in eV, non-negative.  The coupling sign is a
        gauge choice absorbed into the mode operators, so g >= 0 always.
    """

    omega: np.ndarray
    kappa: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float, copy=True)
        kappa = np.array(self.kappa, dtype=float, copy=True)
        g = np.array(self.g, dtype=float, copy=True)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ValidationError(f"omega must be a square matrix, got shape {omega.shape}")
        n = omega.shape[0]
        if n == 0:
            raise ValidationError("at least one mode is required")
        if kappa.shape != (n,):
            raise ValidationError(f"kappa must have shape ({n},), got {kappa.shape}")
        if g.shape != (n,):
            raise ValidationError(f"g must have shape ({n},), got {g.shape}")
        for name, arr in (("omega", omega), ("kappa", kappa), ("g", g)):
            if not np.all(np.isfinite(arr)):
                bad = np.argwhere(~np.isfinite(arr))[0]
                idx = "][".join(str(k) for k in bad)
                raise ValidationError(f"{name}[{idx}] is not finite")
        mism = np.argwhere(omega != omega.T)
        if mism.size:
            i, j = mism[0]
            raise ValidationError(
                f"omega must be exactly symmetric: omega[{i}][{j}] != omega[{j}][{i}]"
            )
        for i, k in enumerate(kappa):
            if not k > 0.0:
                raise ValidationError(f"kappa[{i}] must be > 0, got {k}")
        for i, gi in enumerate(g):
            if gi < 0.0:
                raise ValidationError(f"g[{i}] must be >= 0, got {gi}")
        object.__setattr__(self, "omega", _readonly(omega))
        object.__setattr__(self, "kappa", _readonly(kappa))
        object.__setattr__(self, "g", _readonly(g))

    @property
    def n_modes(self) -> int:
        return self.omega.shape[0]

    def permuted(self, order) -> "ModelParameters":
        """Return a copy with modes relabeled by the index sequence ``order``."""
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(self.n_modes)):
            raise ValidationError("order must be a permutation of range(n_modes)")
        return ModelParameters(
            omega=self.omega[np.ix_(order, order)],
            kappa=self.kappa[order],
            g=self.g[order],
        )

    def sorted_by_energy(self) -> "ModelParameters":
        """Return a copy with modes sorted by ascending diagonal energy."""
        order = np.argsort(np.diag(self.omega), kind="stable")
        return self.permuted(order)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Non-Hermitian effective matrix H = omega - (i/2) diag(kappa).

    Always built by :func:`build_effective_hamiltonian`, never hand-edited.
    Complex symmetric (H == H^T exactly); diagonal imaginary parts are
    -kappa/2 < 0.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"effective matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("effective matrix contains non-finite entries")
        if not np.array_equal(m, m.T):
            raise ValidationError("effective matrix must be exactly complex symmetric")
        if not np.all(np.diag(m).imag < 0):
            raise ValidationError("diagonal imaginary parts must be negative (lossy modes)")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralDensityTable:
    """Tabulated spectral density J(w).

    ``omega_grid`` is strictly increasing and finite; ``j_values`` are finite
    and non-negative up to a clamping tolerance applied at ingestion.
    Physical tables carry positive frequencies only; tables produced by model
    evaluation may extend to w <= 0 since the model expression is defined for
    every real w.
    """

    omega_grid: np.ndarray
    j_values: np.ndarray
    meta: tuple = field(default=(), compare=False)

    def __post_init__(self):
        w = np.array(self.omega_grid, dtype=float, copy=True)
        j = np.array(self.j_values, dtype=float, copy=True)
        if w.ndim != 1 or j.shape != w.shape:
            raise ValidationError(
                f"omega_grid and j_values must be matching 1-d arrays, got {w.shape} and {j.shape}"
            )
        if w.size < 1:
            raise ValidationError("a spectral table needs at least one sample")
        if not np.all(np.isfinite(w)):
            raise ValidationError("omega_grid contains non-finite entries")
        if not np.all(np.isfinite(j)):
            raise ValidationError("j_values contains non-finite entries")
        d = np.diff(w)
        if not np.all(d > 0):
            k = int(np.argmin(d > 0))
            raise ValidationError(f"omega_grid must be strictly increasing (violated at index {k + 1})")
        object.__setattr__(self, "omega_grid", _readonly(w))
        object.__setattr__(self, "j_values", _readonly(j))
        object.__setattr__(self, "meta", tuple(self.meta))

    @classmethod
    def from_samples(cls, omega, j_values, *, tol: Tolerances | None = None,
                     meta: tuple = ()) -> "SpectralDensityTable":
        """Build a physical table from raw samples, applying ingestion rules.

        Frequencies must be positive and duplicate-free; unsorted samples are
        sorted with a warning.  Negative J down to
        ``-tol.negative_j_fraction * max(J)`` are clamped to zero with a
        warning, anything lower is rejected.
        """
        tol = tol or DEFAULT_TOLERANCES
        w = np.asarray(omega, dtype=float).copy()
        j = np.asarray(j_values, dtype=float).copy()
        if w.ndim != 1 or j.shape != w.shape:
            raise ValidationError("omega and j_values must be matching 1-d arrays")
        if w.size < 2:
            raise ValidationError("an ingested spectrum needs at least two samples")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(j)):
            raise ValidationError("table samples must be finite")
        bad = np.nonzero(w <= 0)[0]
        if bad.size:
            raise ValidationError(f"frequencies must be positive (entry {bad[0]} is {w[bad[0]]})")
        notes = list(meta)
        if not np.all(np.diff(w) > 0):
            order = np.argsort(w, kind="stable")
            w, j = w[order], j[order]
            if np.any(np.diff(w) == 0):
                k = int(np.nonzero(np.diff(w) == 0)[0][0])
                raise ValidationError(f"duplicate frequency {w[k]} in table")
            warnings.warn("frequency grid was not sorted; sorting", DataWarning, stacklevel=2)
            notes.append("sorted")
        jmax = float(j.max()) if j.size else 0.0
        floor = -tol.negative_j_fraction * max(jmax, 0.0)
        worst = float(j.min()) if j.size else 0.0
        if worst < floor:
            k = int(np.argmin(j))
            raise ValidationError(
                f"j_values[{k}] = {j[k]} is more negative than the tolerated {floor}"
            )
        if worst < 0.0:
            j = np.where(j < 0.0, 0.0, j)
            warnings.warn(
                "tiny negative spectral-density samples clamped to zero",
                DataWarning, stacklevel=2,
            )
            notes.append("clamped-negative")
        return cls(w, j, meta=tuple(notes))

    def __len__(self) -> int:
        return self.omega_grid.size

    def peak(self) -> float:
        """Largest tabulated J value."""
        return float(self.j_values.max())

    def coverage_ok(self, tol: Tolerances | None = None) -> bool:
        """True when J at both edges is below the edge-coverage fraction of the peak."""
        tol = tol or DEFAULT_TOLERANCES
        pk = self.peak()
        if pk <= 0:
            return True
        edge = max(abs(float(self.j_values[0])), abs(float(self.j_values[-1])))
        return edge <= tol.spectrum_edge_fraction * pk


@dataclass(frozen=True)
class PoleSet:
    """Complex poles and residues of the model spectral function.

    ``values`` are the eigenvalues E_k of the effective matrix (all strictly
    in the lower half-plane); ``residues`` are the squared bilinear overlaps
    lambda_k^2 with lambda_k = g . psi_k.  J(w) reconstructs as
    (1/pi) Im sum_k residues_k / (values_k - w), and the residues sum to
    g.g, which is real.
    """

    values: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        r = np.array(self.residues, dtype=complex, copy=True)
        if v.ndim != 1 or r.shape != v.shape:
            raise ValidationError("values and residues must be matching 1-d arrays")
        if not (np.all(np.isfinite(v.view(float))) and np.all(np.isfinite(r.view(float)))):
            raise ValidationError("poles must be finite")
        if not np.all(v.imag < 0):
            k = int(np.argmax(v.imag >= 0))
            raise ValidationError(f"pole {k} is not in the open lower half-plane: {v[k]}")
        s = r.sum()
        scale = max(abs(s), 1e-300)
        if abs(s.imag) > DEFAULT_TOLERANCES.residue_sum_relative * scale:
            raise ValidationError(
                f"residues must sum to a real number; imaginary part {s.imag} too large"
            )
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "residues", _readonly(r))

    @property
    def n_poles(self) -> int:
        return self.values.size

    def evaluate(self, omega_grid) -> np.ndarray:
        """Spectral density from the pole expansion on a real grid."""
        w = np.asarray(omega_grid, dtype=float)
        terms = self.residues[None, :] / (self.values[None, :] - w[:, None])
        return terms.sum(axis=1).imag / np.pi


def build_effective_hamiltonian(params: ModelParameters) -> EffectiveHamiltonian:
    """Assemble H = omega - (i/2) diag(kappa) for a parameter set.

    Parameters
    ----------
    params : ModelParameters
        Validated model parameters.

    Returns
    -------
    EffectiveHamiltonian
        The complex-symmetric effective matrix in eV.
    """
    h = params.omega.astype(complex)
    h[np.diag_indices(params.n_modes)] -= 0.5j * params.kappa
    return EffectiveHamiltonian(h)


def _as_evaluation_grid(omega_grid) -> np.ndarray:
    w = np.asarray(omega_grid, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError("omega_grid must be a non-empty 1-d array")
    if not np.all(np.isfinite(w)):
        raise ValidationError("omega_grid contains non-finite entries")
    if w.size > 1 and not np.all(np.diff(w) > 0):
        raise ValidationError("omega_grid must be strictly increasing")
    return w


def resolvent_vectors(hmat: np.ndarray, g: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Solve (H - w I) x = g for every grid frequency.

    Returns the stacked solutions with shape (len(grid), N).  Used by both
    the spectral evaluation and the fit Jacobian, which reads the entire
    derivative structure off these vectors.
    """
    n = hmat.shape[0]
    m = grid.size
    out = np.empty((m, n), dtype=complex)
    idx = np.arange(n)
    for lo in range(0, m, _SOLVE_CHUNK):
        hi = min(lo + _SOLVE_CHUNK, m)
        mats = np.broadcast_to(hmat, (hi - lo, n, n)).copy()
        mats[:, idx, idx] -= grid[lo:hi, None]
        out[lo:hi] = np.linalg.solve(mats, np.broadcast_to(g, (hi - lo, n))[..., None])[..., 0]
    return out


def _jmod_solve(params: ModelParameters, grid: np.ndarray) -> np.ndarray:
    h = build_effective_hamiltonian(params).matrix
    x = resolvent_vectors(h, params.g, grid)
    return (x @ params.g).imag / np.pi


def _symmetric_eigensystem(hmat: np.ndarray, tol: Tolerances):
    """Eigendecomposition of a complex-symmetric matrix.

    Eigenvectors are normalized under the bilinear form psi^T psi = 1 (not
    the Hermitian norm) and sign-fixed so the largest-magnitude component
    has non-negative real part.  Raises NumericalError when the matrix is
    numerically defective.
    """
    evals, vecs = np.linalg.eig(hmat)
    order = np.lexsort((evals.imag, evals.real))
    evals = evals[order]
    vecs = vecs[:, order]
    q = np.einsum("ij,ij->j", vecs, vecs)
    if np.any(np.abs(q) < 1e-8):
        raise NumericalError(
            "effective matrix is numerically defective (self-orthogonal eigenvector); "
            "perturb the parameters slightly and retry"
        )
    vecs = vecs / np.sqrt(q)[None, :]
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    flip = (lead.real < 0) | ((lead.real == 0) & (lead.imag < 0))
    vecs[:, flip] *= -1.0
    sv = np.linalg.svd(vecs, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > tol.eigenvector_condition:
        raise NumericalError(
            "eigenvector matrix condition number exceeds "
            f"{tol.eigenvector_condition:g}; the effective matrix is close to defective. "
            "Perturb the parameters slightly and retry"
        )
    return evals, vecs


def _min_pole_gap(evals: np.ndarray) -> float:
    if evals.size < 2:
        return np.inf
    diffs = np.abs(evals[None, :] - evals[:, None])
    diffs[np.diag_indices(evals.size)] = np.inf
    return float(diffs.min())


def compute_poles(params: ModelParameters, *, tol: Tolerances | None = None) -> PoleSet:
    """Poles and residues of the model spectral function.

    Diagonalizes the effective matrix in the complex-symmetric sense,
    E_k and psi_k with psi_k^T psi_k = 1, and returns the pole expansion
    g^T (H - w)^(-1) g = sum_k lambda_k^2 / (E_k - w), lambda_k = g . psi_k.

    Raises
    ------
    NumericalError
        If the effective matrix is numerically defective (eigenvector matrix
        condition number above ``tol.eigenvector_condition``).
    """
    tol = tol or DEFAULT_TOLERANCES
    h = build_effective_hamiltonian(params).matrix
    evals, vecs = _symmetric_eigensystem(h, tol)
    lam = params.g @ vecs
    try:
        return PoleSet(values=evals, residues=lam**2)
    except ValidationError as exc:
        # kappa > 0 guarantees the exact expansion satisfies every PoleSet
        # invariant, so a violation here is eigensolver backward error on a
        # near-defective matrix
        raise NumericalError(
            f"pole expansion failed validation ({exc}); the effective "
            "matrix is numerically near-defective, perturb the parameters"
        ) from exc


def evaluate_jmod(
    params: ModelParameters,
    omega_grid,
    *,
    method: str = "auto",
    tol: Tolerances | None = None,
) -> SpectralDensityTable:
    """Evaluate the model spectral density on a real frequency grid.

    Parameters
    ----------
    params : ModelParameters
        Model parameters.
    omega_grid : array_like
        Strictly increasing, finite evaluation frequencies in eV.  They need
        not be positive; the model expression is defined for every real w.
    method : {'auto', 'solve', 'poles'}
        'solve' performs one linear solve per frequency; 'poles' evaluates
        the pole expansion after one eigendecomposition.  'auto' picks
        'solve' for small problems (N <= 8 and <= 10^4 points) and 'poles'
        for larger ones, falling back to 'solve' when poles are nearly
        degenerate (spacing below ``tol.pole_degeneracy_ev``).

    Returns
    -------
    SpectralDensityTable
        J values in eV on the requested grid.

    Raises
    ------
    NumericalError
        If ``method='poles'`` is requested explicitly while the pole spacing
        is below the degeneracy tolerance.
    """
    tol = tol or DEFAULT_TOLERANCES
    grid = _as_evaluation_grid(omega_grid)
    if method not in ("auto", "solve", "poles"):
        raise ValidationError(f"unknown evaluation method: {method!r}")
    resolved = method
    if method == "auto":
        resolved = "solve"
        if params.n_modes > _POLE_PATH_MODES or grid.size > _POLE_PATH_GRID:
            h = build_effective_hamiltonian(params).matrix
            gap = _min_pole_gap(np.linalg.eigvals(h))
            if gap > tol.pole_degeneracy_ev:
                try:
                    poles = compute_poles(params, tol=tol)
                    resolved = "poles"
                except NumericalError:
                    pass  # near-defective; the solve path stays accurate
    if resolved == "poles":
        if method == "poles":
            poles = compute_poles(params, tol=tol)
            if _min_pole_gap(poles.values) <= tol.pole_degeneracy_ev:
                raise NumericalError(
                    "pole spacing below the degeneracy tolerance "
                    f"({tol.pole_degeneracy_ev:g} eV); use the linear-solve path"
                )
        j = poles.evaluate(grid)
    else:
        j = _jmod_solve(params, grid)
    return SpectralDensityTable(grid, j)


def evaluate_lorentzian_sum(
    params: ModelParameters,
    omega_grid,
    *,
    tol: Tolerances | None = None,
) -> SpectralDensityTable:
    """Closed-form spectral density for non-interacting (diagonal) modes.

    J(w) = sum_i (g_i^2 / pi) (kappa_i / 2) / ((w - omega_ii)^2 + kappa_i^2/4)

    Raises
    ------
    ValidationError
        If any off-diagonal magnitude exceeds
        ``tol.diagonal_offdiag_fraction`` times the largest entry magnitude.
    """
    tol = tol or DEFAULT_TOLERANCES
    grid = _as_evaluation_grid(omega_grid)
    off = params.omega - np.diag(np.diag(params.omega))
    scale = float(np.abs(params.omega).max())
    if scale > 0 and float(np.abs(off).max()) >= tol.diagonal_offdiag_fraction * scale:
        raise ValidationError(
            "evaluate_lorentzian_sum requires a diagonal mode matrix "
            f"(max off-diagonal {np.abs(off).max():g} vs allowed "
            f"{tol.diagonal_offdiag_fraction * scale:g})"
        )
    centers = np.diag(params.omega)
    det = grid[:, None] - centers[None, :]
    num = (params.g**2 / np.pi) * (params.kappa / 2.0)
    j = (num[None, :] / (det**2 + (params.kappa[None, :] ** 2) / 4.0)).sum(axis=1)
    return SpectralDensityTable(grid, j)


def purcell_factor(table: SpectralDensityTable, mu_enm: float) -> np.ndarray:
    """Purcell enhancement P(w) = J(w) / J0(w) relative to free space.

    Parameters
    ----------
    table : SpectralDensityTable
        Tabulated spectral density; its grid must be strictly positive.
    mu_enm : float
        Transition dipole moment in e nm, strictly positive.

    Returns
    -------
    ndarray
        Dimensionless enhancement factors aligned with ``table.omega_grid``.
    """
    if not mu_enm > 0:
        raise ValidationError(f"mu must be > 0, got {mu_enm}")
    if not np.all(table.omega_grid > 0):
        raise ValidationError("Purcell factors need positive frequencies")
    if not table.coverage_ok():
        warnings.warn(
            "spectral table does not decay at its edges; enhancement factors "
            "near the boundary may be affected by truncation",
            CoverageWarning, stacklevel=2,
        )
    j0 = free_space_spectral_density(table.omega_grid, mu_enm)
    return table.j_values / j0
