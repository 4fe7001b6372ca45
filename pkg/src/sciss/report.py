"""Point estimates with uncertainty, packaged for reporting and serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ising import IsingParams

Z_95 = 1.96  # normal quantile used for all 95% intervals


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Full-graph estimate: parameters, standard errors, and 95% intervals.

    ``se_pairs`` is symmetric with the node-intercept standard errors on its
    diagonal; ``se_nodes`` covers the per-node coefficient blocks over ``w``.
    ``diagnostics`` holds only JSON-ready values so reports round-trip through
    serialization unchanged.
    """

    method: str
    theta: IsingParams
    se_pairs: np.ndarray
    se_nodes: np.ndarray
    n_labeled: int
    n_unlabeled: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def ci_pairs(self):
        half = Z_95 * self.se_pairs
        return self.theta.pair_coefs - half, self.theta.pair_coefs + half

    @property
    def ci_nodes(self):
        half = Z_95 * self.se_nodes
        return self.theta.node_coefs - half, self.theta.node_coefs + half

    def __eq__(self, other):
        if not isinstance(other, EstimateReport):
            return NotImplemented
        return (
            self.method == other.method
            and np.array_equal(self.theta.node_coefs, other.theta.node_coefs)
            and np.array_equal(self.theta.pair_coefs, other.theta.pair_coefs)
            and np.array_equal(self.se_pairs, other.se_pairs)
            and np.array_equal(self.se_nodes, other.se_nodes)
            and self.n_labeled == other.n_labeled
            and self.n_unlabeled == other.n_unlabeled
            and self.diagnostics == other.diagnostics
        )


def make_report(method, theta: IsingParams, omega_pairs, omega_nodes,
                n_labeled, n_unlabeled, diagnostics=None) -> EstimateReport:
    """Assemble a report from asymptotic variances: ``se = sqrt(omega / n)``."""
    se_pairs = np.sqrt(np.maximum(omega_pairs, 0.0) / n_labeled)
    se_nodes = np.sqrt(np.maximum(omega_nodes, 0.0) / n_labeled)
    return EstimateReport(
        method=method,
        theta=theta,
        se_pairs=se_pairs,
        se_nodes=se_nodes,
        n_labeled=int(n_labeled),
        n_unlabeled=int(n_unlabeled),
        diagnostics=diagnostics or {},
    )
