"""Centralized numerical tolerances.

Every named tolerance used across the package lives in one frozen record so
defaults can be inspected and overridden in a single place.  Functions that
consume tolerances accept an optional ``tol`` argument defaulting to
``DEFAULT_TOLERANCES``; the command line exposes the same knob through
``--tol-profile``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds, grouped by the checks they control.

    Attributes
    ----------
    negative_j_fraction
        Ingestion: negative spectral-density samples down to this fraction of
        the table maximum are clamped to zero; anything lower is rejected.
    spectrum_edge_fraction
        Coverage: J at the table edges above this fraction of the peak emits
        a CoverageWarning.
    path_agreement
        Required relative agreement between the linear-solve and pole-sum
        evaluation paths.
    lorentzian_match
        Required relative agreement between the resolvent evaluation and the
        closed-form Lorentzian sum for diagonal mode matrices.
    diagonal_offdiag_fraction
        A mode matrix counts as diagonal when every off-diagonal magnitude is
        below this fraction of the largest entry magnitude.
    pole_degeneracy_ev
        Eigenvalue spacing (eV) below which the pole-sum path is refused.
    residue_sum_relative
        Allowed imaginary part in the sum of pole residues, relative to its
        magnitude.
    eigenvector_condition
        Condition-number ceiling for the eigenvector matrix before the
        effective matrix is reported as defective.
    norm_slack
        Single-excitation norm may exceed 1, and may grow between steps, by
        at most this much.
    trace_preservation
        Density-matrix trace drift ceiling for the dense master-equation
        solver.
    orthogonality
        Orthogonal-matrix and spectral-reconstruction checks for the
        normal-mode (tilde) basis.
    rank1_agreement
        Required relative agreement between the factorized and generic
        intensity paths.
    kernel_edge_fraction
        Field-kernel quadrature: integrand magnitude at the frequency edges
        above this fraction of its maximum flags incomplete coverage.
    kernel_decay_fraction
        Field kernel should decay below this fraction of its peak magnitude
        by the end of the lag window; otherwise a coverage flag is recorded.
    report_consistency
        Allowed discrepancy between stored and recomputed fit-report errors.
    """

    negative_j_fraction: float = 1e-12
    spectrum_edge_fraction: float = 1e-4
    path_agreement: float = 1e-10
    lorentzian_match: float = 1e-12
    diagonal_offdiag_fraction: float = 1e-14
    pole_degeneracy_ev: float = 1e-12
    residue_sum_relative: float = 1e-10
    eigenvector_condition: float = 1e8
    norm_slack: float = 1e-9
    trace_preservation: float = 1e-9
    orthogonality: float = 1e-12
    rank1_agreement: float = 1e-10
    kernel_edge_fraction: float = 1e-3
    kernel_decay_fraction: float = 1e-6
    report_consistency: float = 1e-14

    def strict(self) -> "Tolerances":
        """Profile with ten-fold tighter data-hygiene thresholds."""
        return replace(
            self,
            negative_j_fraction=self.negative_j_fraction / 10.0,
            spectrum_edge_fraction=self.spectrum_edge_fraction / 10.0,
            kernel_edge_fraction=self.kernel_edge_fraction / 10.0,
            kernel_decay_fraction=self.kernel_decay_fraction / 10.0,
            norm_slack=self.norm_slack / 10.0,
            trace_preservation=self.trace_preservation / 10.0,
        )


DEFAULT_TOLERANCES = Tolerances()


def resolve_profile(name: str) -> Tolerances:
    """Return the tolerance record for a named profile ('default' or 'strict')."""
    if name == "default":
        return DEFAULT_TOLERANCES
    if name == "strict":
        return DEFAULT_TOLERANCES.strict()
    raise ValueError(f"unknown tolerance profile: {name!r}")
