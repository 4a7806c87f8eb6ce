"""Synthetic model generators shared by the test suite and the CLI demo mode.

Every generator returns validated :class:`~fewmode.spectral.ModelParameters`
or a sampled :class:`~fewmode.spectral.SpectralDensityTable`, so the full
pipeline can run with zero external data.  Random distributions used by the
statistical sweeps are documented here and nowhere else.
"""

from __future__ import annotations

import numpy as np

from .spectral import ModelParameters, SpectralDensityTable, evaluate_jmod

__all__ = [
    "random_model_parameters",
    "random_interacting_model",
    "sampling_grid",
    "demo_model",
    "demo_spectrum",
    "fano_three_mode",
    "nineteen_mode_model",
]


def random_model_parameters(rng: np.random.Generator, n_modes: int) -> ModelParameters:
    """Draw a random valid parameter set for statistical sweeps.

    Distribution: diagonal energies uniform in [1.0, 2.4] eV; off-diagonal
    couplings uniform in [-0.05, 0.05] eV; loss rates log-uniform in
    [5e-3, 1e-1] eV; couplings uniform in [0.01, 0.1] eV.
    """
    diag = np.sort(rng.uniform(1.0, 2.4, size=n_modes))
    omega = rng.uniform(-0.05, 0.05, size=(n_modes, n_modes))
    omega = np.triu(omega, k=1)
    omega = omega + omega.T + np.diag(diag)
    kappa = np.exp(rng.uniform(np.log(5e-3), np.log(1e-1), size=n_modes))
    g = rng.uniform(0.01, 0.1, size=n_modes)
    return ModelParameters(omega=omega, kappa=kappa, g=g)


def random_interacting_model(rng: np.random.Generator, n_modes: int) -> ModelParameters:
    """Random interacting model with well-separated resonances.

    Used by round-trip fitting checks: diagonal energies are spread with a
    guaranteed minimum gap so every mode leaves a visible feature, and
    off-diagonal couplings stay below a third of the smallest gap.
    """
    gaps = rng.uniform(0.12, 0.30, size=n_modes)
    diag = 1.2 + np.cumsum(gaps) - gaps[0]
    min_gap = float(gaps[1:].min()) if n_modes > 1 else 0.2
    omega = np.triu(rng.uniform(-1.0, 1.0, size=(n_modes, n_modes)), k=1)
    omega *= 0.3 * min_gap
    omega = omega + omega.T + np.diag(diag)
    kappa = np.exp(rng.uniform(np.log(0.01), np.log(0.06), size=n_modes))
    g = rng.uniform(0.02, 0.08, size=n_modes)
    return ModelParameters(omega=omega, kappa=kappa, g=g)


def sampling_grid(params: ModelParameters, n_points: int = 4001, pad: float = 10.0) -> np.ndarray:
    """Evaluation grid spanning all resonances with ``pad`` half-widths of margin."""
    diag = np.diag(params.omega)
    margin = pad * float(params.kappa.max()) + 4.0 * float(np.abs(params.g).max())
    lo = float(diag.min()) - margin
    hi = float(diag.max()) + margin
    lo = max(lo, 1e-3)
    return np.linspace(lo, hi, n_points)


def demo_model() -> ModelParameters:
    """Deterministic six-mode interacting model with visible interference dips.

    Two broad lossy modes overlap four narrow ones; the off-diagonal
    couplings produce asymmetric line shapes that a non-interacting sum of
    Lorentzians cannot reproduce.
    """
    diag = np.array([1.30, 1.45, 1.58, 1.72, 1.86, 2.02])
    omega = np.diag(diag)
    omega[0, 2] = omega[2, 0] = 0.035
    omega[1, 2] = omega[2, 1] = -0.022
    omega[2, 4] = omega[4, 2] = 0.028
    omega[3, 4] = omega[4, 3] = -0.018
    omega[4, 5] = omega[5, 4] = 0.024
    kappa = np.array([0.012, 0.018, 0.110, 0.016, 0.095, 0.020])
    g = np.array([0.030, 0.035, 0.085, 0.028, 0.080, 0.033])
    return ModelParameters(omega=omega, kappa=kappa, g=g)


def demo_spectrum(n_points: int = 4001, noise: float = 0.0, seed: int = 7):
    """Sampled spectral density of the demo model.

    Parameters
    ----------
    n_points : int
        Number of grid points.
    noise : float
        Multiplicative noise level (0 disables); samples are perturbed by
        ``(1 + noise * xi)`` with standard-normal xi and clamped at zero.
    seed : int
        Seed for the noise generator.

    Returns
    -------
    (SpectralDensityTable, ModelParameters)
        The sampled table and the generating parameters.
    """
    params = demo_model()
    grid = sampling_grid(params, n_points=n_points)
    table = evaluate_jmod(params, grid)
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        j = table.j_values * (1.0 + noise * rng.standard_normal(len(table)))
        table = SpectralDensityTable(grid, np.maximum(j, 0.0))
    return table, params


def fano_three_mode() -> ModelParameters:
    """Fixed three-mode generator whose spectrum requires mode-mode coupling.

    A broad lossy mode sits between two narrow ones and couples to both,
    carving interference dips into the envelope.
    """
    omega = np.array([
        [1.35, 0.080, 0.000],
        [0.080, 1.55, 0.065],
        [0.000, 0.065, 1.76],
    ])
    kappa = np.array([0.012, 0.140, 0.018])
    g = np.array([0.025, 0.110, 0.030])
    return ModelParameters(omega=omega, kappa=kappa, g=g)


def nineteen_mode_model(seed: int = 2024) -> ModelParameters:
    """Nineteen-mode interacting model for large-fit stress checks.

    A deterministic pseudo-random draw: energies ladder from 1.0 to 2.6 eV
    with jittered spacing, widths alternate between narrow (3-20 meV) and
    broad (60-150 meV) groups, and each mode couples weakly to its spectral
    neighbors.
    """
    n = 19
    rng = np.random.default_rng(seed)
    diag = np.linspace(1.0, 2.6, n) + rng.uniform(-0.015, 0.015, size=n)
    diag = np.sort(diag)
    broad = rng.random(n) < 0.25
    kappa = np.where(
        broad,
        np.exp(rng.uniform(np.log(0.06), np.log(0.15), size=n)),
        np.exp(rng.uniform(np.log(0.003), np.log(0.02), size=n)),
    )
    g = np.where(broad, rng.uniform(0.05, 0.09, size=n), rng.uniform(0.02, 0.05, size=n))
    omega = np.diag(diag)
    for i in range(n - 1):
        omega[i, i + 1] = omega[i + 1, i] = rng.uniform(-0.012, 0.012)
    return ModelParameters(omega=omega, kappa=kappa, g=g)
