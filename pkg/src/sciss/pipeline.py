"""Method drivers: assemble full-graph reports from shared fitted pieces.

A single supervised fit backs every method; the conditional models and their
projections are fitted once and reused, which both saves work in replication
studies and enforces the requirement that labeled and unlabeled projections
share identical nuisance estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditional import PosParams, fit_aug, fit_pos
from .density_ratio import fit_dr
from .ising import IsingParams
from .report import EstimateReport, make_report
from .semisupervised import (
    InfluenceTable,
    build_influence,
    ensemble_allocate,
    intrinsic_pair_estimate,
    pair_residuals,
    refine_intrinsic_pair,
    sciss_omega,
    sciss_theta,
)
from .supervised import fit_sl, score_rows, stacked_position, var_sl

METHOD_TAGS = ("SL", "DR", "SCISS-Aug", "SCISS-PoS", "INTR", "ES")


@dataclass
class CoreFit:
    """Data plus the supervised fit every method builds on."""

    YL: np.ndarray
    XL: np.ndarray
    WL: np.ndarray
    XU: np.ndarray
    WU: np.ndarray
    theta_sl: IsingParams
    fits: list

    @property
    def q(self):
        return self.YL.shape[1]

    @property
    def d(self):
        return self.WL.shape[1] - 1


def fit_core(YL, XL, WL, XU, WU) -> CoreFit:
    YL = np.asarray(YL, dtype=float)
    XL = np.asarray(XL, dtype=float)
    WL = np.asarray(WL, dtype=float)
    XU = np.asarray(XU, dtype=float)
    WU = np.asarray(WU, dtype=float)
    theta_sl, fits = fit_sl(YL, WL)
    return CoreFit(YL, XL, WL, XU, WU, theta_sl, fits)


def transform_counts(X, families):
    """log(x + 1) on count-family columns, applied for the augmented model
    and the density-ratio baseline; the surrogate model keeps raw counts."""
    X = np.asarray(X, dtype=float)
    cols = [j for j, fam in enumerate(families) if fam == "poisson"]
    if not cols:
        return X
    out = X.copy()
    out[:, cols] = np.log1p(out[:, cols])
    return out


def sl_report(core: CoreFit) -> EstimateReport:
    omega_pairs, omega_nodes = var_sl(core.YL, core.WL, core.fits)
    return make_report("SL", core.theta_sl, omega_pairs, omega_nodes,
                       core.YL.shape[0], core.XU.shape[0])


@dataclass
class FittedConditional:
    """A fitted conditional model plus the feature matrices it consumes."""

    kind: str                   # "aug" or "pos"
    model: object               # AugParams or PosParams
    XL: np.ndarray
    XU: np.ndarray
    table: InfluenceTable


def fit_conditional(core: CoreFit, kind: str, families, lam=None) -> FittedConditional:
    families = resolve_families(families, core.q)
    if kind == "aug":
        XL = transform_counts(core.XL, families)
        XU = transform_counts(core.XU, families)
        model = fit_aug(core.YL, XL, core.WL, lam=lam)
    elif kind == "pos":
        XL, XU = core.XL, core.XU
        model = fit_pos(core.YL, XL, core.WL, core.theta_sl, families)
    else:
        raise ValueError(f"unknown conditional model kind {kind!r}")
    table = build_influence(core.YL, core.WL, XL, XU, core.WU, core.fits, model)
    return FittedConditional(kind, model, XL, XU, table)


def sciss_report(core: CoreFit, cond: FittedConditional) -> EstimateReport:
    theta = sciss_theta(core.fits, cond.table)
    omega_pairs, omega_nodes = sciss_omega(cond.table)
    diagnostics = {"conditional": cond.kind}
    if isinstance(cond.model, PosParams):
        diagnostics["clamped_nodes"] = [int(j) for j in np.flatnonzero(cond.model.clamped)]
    method = "SCISS-Aug" if cond.kind == "aug" else "SCISS-PoS"
    return make_report(method, theta, omega_pairs, omega_nodes,
                       core.YL.shape[0], core.XU.shape[0], diagnostics)


def intr_report(core: CoreFit, cond: FittedConditional, max_steps=4) -> EstimateReport:
    """Intrinsic-efficient refinement of every pairwise coefficient.

    Each pair gets its own refined conditional model; node coefficient blocks
    keep the likelihood-fitted correction.
    """
    base_theta = sciss_theta(core.fits, cond.table)
    omega_pairs, omega_nodes = sciss_omega(cond.table)
    pair = base_theta.pair_coefs.copy()
    omega = omega_pairs.copy()
    paths = {}
    for j in range(core.q):
        for k in range(j + 1, core.q):
            refined, path = refine_intrinsic_pair(
                cond.model, core.YL, cond.XL, core.WL, core.fits, j, k, max_steps=max_steps
            )
            est, om = intrinsic_pair_estimate(
                refined, core.YL, cond.XL, core.WL, cond.XU, core.WU, core.fits, j, k
            )
            pair[j, k] = pair[k, j] = est
            omega[j, k] = omega[k, j] = om
            paths[f"{j + 1},{k + 1}"] = [float(v) for v in path]
    theta = IsingParams(base_theta.node_coefs, pair)
    diagnostics = {"conditional": cond.kind, "objective_paths": paths}
    return make_report("INTR", theta, omega, omega_nodes,
                       core.YL.shape[0], core.XU.shape[0], diagnostics)


def dr_report(core: CoreFit, families) -> EstimateReport:
    families = resolve_families(families, core.q)
    XL = transform_counts(core.XL, families)
    XU = transform_counts(core.XU, families)
    theta, _, omega_pairs, omega_nodes, weights = fit_dr(core.YL, XL, core.WL, XU)
    diagnostics = {"weight_mean": float(weights.mean()), "weight_max": float(weights.max())}
    return make_report("DR", theta, omega_pairs, omega_nodes,
                       core.YL.shape[0], core.XU.shape[0], diagnostics)


def ensemble_report(core: CoreFit, sl: EstimateReport, members) -> EstimateReport:
    """Component-wise variance-optimal convex combination.

    ``members`` pairs each semi-supervised report with its influence table;
    the supervised estimator always participates.  Per component, weights
    come from the inverse covariance of the per-subject influence columns,
    projected onto the simplex.
    """
    q, d = core.q, core.d
    n = core.YL.shape[0]
    labels = ["SL"] + [rep.method for rep, _ in members]
    scores = [score_rows(core.YL, core.WL, core.fits[j], j) for j in range(q)]

    pair = np.zeros((q, q))
    omega_pairs = np.zeros((q, q))
    node = np.zeros((q, d + 1))
    omega_nodes = np.zeros((q, d + 1))
    alphas = {}
    dropped = {}

    for j in range(q):
        own = stacked_position(j, j, q, d)
        for t in range(d + 1):
            col_sl = scores[j][:, own][:, t]
            cols = [col_sl] + [col_sl - tab.proj_labeled[j][:, own][:, t] for _, tab in members]
            ests = [sl.theta.node_coefs[j, t]] + [rep.theta.node_coefs[j, t] for rep, _ in members]
            alpha, variance, drop = ensemble_allocate(np.column_stack(cols))
            node[j, t] = float(alpha @ ests)
            omega_nodes[j, t] = variance
            key = f"{j + 1},{j + 1}" if t == 0 else f"{j + 1},{j + 1}:{t}"
            alphas[key] = [float(a) for a in alpha]
            if drop:
                dropped[key] = [labels[i] for i in drop]
        omega_pairs[j, j] = omega_nodes[j, 0]
        for k in range(j + 1, q):
            pos_jk = stacked_position(j, k, q, d)
            pos_kj = stacked_position(k, j, q, d)
            col_sl = 0.5 * (scores[j][:, pos_jk] + scores[k][:, pos_kj])
            cols = [col_sl] + [0.5 * pair_residuals(tab, j, k) for _, tab in members]
            ests = [sl.theta.pair_coefs[j, k]] + [rep.theta.pair_coefs[j, k] for rep, _ in members]
            alpha, variance, drop = ensemble_allocate(np.column_stack(cols))
            pair[j, k] = pair[k, j] = float(alpha @ ests)
            omega_pairs[j, k] = omega_pairs[k, j] = variance
            alphas[f"{j + 1},{k + 1}"] = [float(a) for a in alpha]
            if drop:
                dropped[f"{j + 1},{k + 1}"] = [labels[i] for i in drop]

    theta = IsingParams(node, pair)
    diagnostics = {"members": labels, "alpha": alphas}
    if dropped:
        diagnostics["dropped"] = dropped
    return make_report("ES", theta, omega_pairs, omega_nodes,
                       n, core.XU.shape[0], diagnostics)


def resolve_families(families, q):
    """Normalize a family spec (single tag or per-node sequence) to a tuple."""
    if families is None:
        families = "gaussian"
    if isinstance(families, str):
        names = families.split(",") if "," in families else [families] * q
    else:
        names = list(families)
    if len(names) != q:
        raise ValueError(f"need {q} surrogate families, got {len(names)}")
    return tuple(name.strip() for name in names)


def fit_methods(YL, XL, WL, XU, WU, methods, families=None, lam=None,
                intr_base="aug", intr_steps=4):
    """Fit every requested method, sharing the supervised fit and projections.

    ``intr_base`` names the conditional backend the intrinsic refinement
    starts from.  Returns a dict from method tag to :class:`EstimateReport`.
    """
    methods = list(methods)
    unknown = [m for m in methods if m not in METHOD_TAGS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected {METHOD_TAGS}")
    core = fit_core(YL, XL, WL, XU, WU)
    sl = sl_report(core)
    reports = {}
    if "SL" in methods:
        reports["SL"] = sl

    wants_intr = "INTR" in methods
    need_aug = ("SCISS-Aug" in methods or "ES" in methods
                or (wants_intr and intr_base == "aug"))
    need_pos = ("SCISS-PoS" in methods or "ES" in methods
                or (wants_intr and intr_base == "pos"))
    cond_aug = fit_conditional(core, "aug", families, lam=lam) if need_aug else None
    cond_pos = fit_conditional(core, "pos", families) if need_pos else None

    if "SCISS-Aug" in methods:
        reports["SCISS-Aug"] = sciss_report(core, cond_aug)
    if "SCISS-PoS" in methods:
        reports["SCISS-PoS"] = sciss_report(core, cond_pos)
    if wants_intr:
        reports["INTR"] = intr_report(core, cond_aug if intr_base == "aug" else cond_pos,
                                      max_steps=intr_steps)
    if "ES" in methods:
        members = [
            (reports.get("SCISS-Aug") or sciss_report(core, cond_aug), cond_aug.table),
            (reports.get("SCISS-PoS") or sciss_report(core, cond_pos), cond_pos.table),
        ]
        reports["ES"] = ensemble_report(core, sl, members)
    if "DR" in methods:
        reports["DR"] = dr_report(core, families)
    return reports
