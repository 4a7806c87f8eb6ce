"""
Model spectral densities, poles, and Purcell enhancement
========================================================

A small network of coupled lossy modes produces a spectral density with
asymmetric interference features that no plain sum of Lorentzians can
reproduce.  This script builds the three-mode demonstration model, looks
at its spectrum from both evaluation routes, and reads off the complex
resonances.
"""

from pathlib import Path

import numpy as np

from fewmode import (
    ModelParameters,
    compute_poles,
    evaluate_jmod,
    evaluate_lorentzian_sum,
    free_space_spectral_density,
    purcell_factor,
)
from fewmode.io import write_poles, write_spectrum
from fewmode.synthetic import fano_three_mode, sampling_grid

out_dir = Path(__file__).parent / "demo_output"
out_dir.mkdir(exist_ok=True)

# a broad lossy mode sandwiched between two narrow ones, all coupled
params = fano_three_mode()
print("mode energies (eV):", np.round(np.diag(params.omega), 3))
print("loss rates   (eV):", params.kappa)
print("couplings    (eV):", params.g)

# the full model spectrum vs what the same modes would give without
# their mutual couplings: the difference is the interference structure
grid = sampling_grid(params, n_points=2001)
j_full = evaluate_jmod(params, grid)
decoupled = ModelParameters(
    omega=np.diag(np.diag(params.omega)), kappa=params.kappa, g=params.g
)
j_diag = evaluate_lorentzian_sum(decoupled, grid)
write_spectrum(out_dir / "j_interacting.csv", j_full)
write_spectrum(out_dir / "j_lorentzian.csv", j_diag)

dip = grid[np.argmin(np.abs(grid - 1.47))]
k = int(np.argmin(np.abs(grid - dip)))
print(f"\nnear {dip:.2f} eV the interacting spectrum carries "
      f"{j_full.j_values[k] / j_diag.j_values[k]:.2f}x the Lorentzian value")

# complex resonances: each pole sits in the lower half-plane, its
# imaginary part is half a linewidth, and the residues add up to g.g
poles = compute_poles(params)
write_poles(out_dir / "poles.csv", poles)
print("\npoles (eV):")
for v, r in zip(poles.values, poles.residues):
    print(f"  {v.real:.4f} - {-v.imag:.4f}i   residue {r:.6f}")
print("residue sum", poles.residues.sum().real, " g.g", float(params.g @ params.g))

# Purcell spectrum: enhancement of emission over free space for a fixed
# dipole moment; stick to the resonance window, since J/J0 is meaningless
# far below the optical range where J0 ~ w^3 vanishes
mu_enm = 0.05
window = np.linspace(1.0, 2.1, 1101)
j_window = evaluate_jmod(params, window)
fp = purcell_factor(j_window, mu_enm)
k_peak = int(np.argmax(fp))
print(f"\npeak Purcell factor {fp[k_peak]:.3g} at {window[k_peak]:.3f} eV "
      f"for a {mu_enm} e nm dipole")
print(f"free-space J there: {free_space_spectral_density(window[k_peak], mu_enm):.3e} eV")

print("\nwrote", sorted(p.name for p in out_dir.glob("*.csv")))
