"""Pseudo-likelihood logistic regression with design-based inference.

The fit maximizes the weighted log likelihood

    sum_i w_i [ y_i log mu_i + (1 - y_i) log(1 - mu_i) ]

by iteratively reweighted least squares with working weights w_i mu_i
(1 - mu_i) and step halving when a step would decrease the likelihood.
Weights are mean-normalized inside the solver so the convergence
criterion (sup-norm of the score) is weight-scale-free; the reported
pseudo log likelihood is on the caller's weight scale.

The sandwich covariance is V = H^-1 G H^-1, where H is the weighted
information and G is the between-PSU (Taylor) covariance of the score
contributions u_i = w_i (y_i - mu_i) x_i. Design-adjusted information
criteria penalize by the effective parameter count p* = trace(H^-1 G):
dAIC = -2 loglik + 2 p*, and dBIC replaces the 2 with log of the
design-effect-adjusted effective sample size of the outcome.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .design import DesignFrame
from .errors import ModelError
from .estimate import design_effect, taylor_linearized_covariance

__all__ = [
    "LogitModel",
    "WaldResult",
    "design_aic_bic",
    "fit_weighted_logit",
    "logit_model_from_json",
    "logit_model_to_json",
    "logit_trainer",
    "predict",
    "sandwich_variance",
    "wald_test",
]

_ETA_CLIP = 35.0
_BETA_SD_CAP = 40.0  # |beta_j| * sd(x_j) beyond this flags separation


@dataclass(frozen=True)
class LogitModel:
    """Fitted weighted logistic regression (intercept first)."""

    coefficients: np.ndarray
    pseudo_loglik: float
    iterations: int
    converged: bool
    feature_names: tuple[str, ...]
    outcome_name: str
    rows_used: np.ndarray
    insample_scores: np.ndarray

    @property
    def n_used(self) -> int:
        return len(self.rows_used)


def _design_matrix(frame: DesignFrame, features, outcome):
    y_col = frame.column(outcome)
    cols = [frame.column(f) for f in features]
    mask = frame.domain & ~np.isnan(y_col)
    for c in cols:
        mask &= ~np.isnan(c)
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise ModelError("no complete cases for the requested model")
    y = y_col[rows]
    if not np.isin(y, (0.0, 1.0)).all():
        raise ModelError(f"outcome {outcome!r} must be binary 0/1")
    x = np.column_stack([np.ones(rows.size)] + [c[rows] for c in cols])
    return x, y, rows


def _loglik(y, eta, wn):
    # Numerically stable: -log(1 + exp(-eta)) = min(eta,0) - log1p(exp(-|eta|))
    log_mu = np.minimum(eta, 0) - np.log1p(np.exp(-np.abs(eta)))
    log_one_minus = log_mu - eta
    return float(wn @ (y * log_mu + (1 - y) * log_one_minus))


def fit_weighted_logit(frame: DesignFrame, features, outcome: str,
                       tol: float = 1e-8, max_iter: int = 50) -> LogitModel:
    """Fit by IRLS on the domain's complete cases.

    Raises on a rank-deficient design matrix and on separation (detected
    when a standardized coefficient runs away).
    """
    features = tuple(features)
    x, y, rows = _design_matrix(frame, features, outcome)
    n, p = x.shape
    if np.linalg.matrix_rank(x) < p:
        raise ModelError("rank-deficient design matrix")
    w = frame.w[rows]
    w_mean = w.mean()
    wn = w / w_mean

    sd = x.std(axis=0)
    sd[sd == 0] = 1.0  # intercept column
    beta = np.zeros(p)
    eta = x @ beta
    ll = _loglik(y, eta, wn)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = 1 / (1 + np.exp(-np.clip(eta, -_ETA_CLIP, _ETA_CLIP)))
        score = x.T @ (wn * (y - mu))
        if np.abs(score).max() <= tol:
            converged = True
            break
        working = wn * np.maximum(mu * (1 - mu), 1e-10)
        hess = x.T @ (working[:, None] * x)
        try:
            delta = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError as exc:
            raise ModelError(f"singular information matrix: {exc}") from exc
        step = 1.0
        for _ in range(30):
            candidate = beta + step * delta
            cand_ll = _loglik(y, x @ candidate, wn)
            if cand_ll >= ll - 1e-12:
                break
            step /= 2
        beta = beta + step * delta
        eta = x @ beta
        ll = cand_ll
        if np.abs(beta * sd).max() > _BETA_SD_CAP:
            raise ModelError(
                "separation detected: coefficients diverging "
                f"(|beta*sd| = {np.abs(beta * sd).max():.1f})"
            )
    scores = 1 / (1 + np.exp(-np.clip(x @ beta, -_ETA_CLIP, _ETA_CLIP)))
    return LogitModel(
        coefficients=beta,
        pseudo_loglik=ll * w_mean,
        iterations=it,
        converged=converged,
        feature_names=features,
        outcome_name=outcome,
        rows_used=rows,
        insample_scores=scores,
    )


def predict(model: LogitModel, features: np.ndarray) -> np.ndarray:
    """Scores in [0, 1] for a (n, p) feature matrix (no intercept column)."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != len(model.feature_names):
        raise ModelError(
            f"model expects {len(model.feature_names)} features, "
            f"got {features.shape[1]}"
        )
    x = np.column_stack([np.ones(features.shape[0]), features])
    eta = np.clip(x @ model.coefficients, -_ETA_CLIP, _ETA_CLIP)
    return 1 / (1 + np.exp(-eta))


def predict_frame(model: LogitModel, frame: DesignFrame) -> np.ndarray:
    """Full-length score vector; NaN where a feature is missing."""
    out = np.full(frame.n, np.nan)
    cols = [frame.column(f) for f in model.feature_names]
    mask = np.ones(frame.n, dtype=bool)
    for c in cols:
        mask &= ~np.isnan(c)
    if mask.any():
        x = np.column_stack([c[mask] for c in cols]) if cols else np.empty((mask.sum(), 0))
        out[mask] = predict(model, x)
    return out


def _score_parts(model: LogitModel, frame: DesignFrame):
    x, y, rows = _design_matrix(frame, model.feature_names, model.outcome_name)
    if not np.array_equal(rows, model.rows_used):
        raise ModelError("frame does not match the rows the model was fitted on")
    w = frame.w[rows]
    mu = model.insample_scores
    hess = x.T @ ((w * np.maximum(mu * (1 - mu), 1e-10))[:, None] * x)
    u = np.zeros((frame.n, x.shape[1]))
    u[rows] = (w * (y - mu))[:, None] * x
    g = taylor_linearized_covariance(frame, u)
    return hess, g


def sandwich_variance(model: LogitModel, frame: DesignFrame) -> np.ndarray:
    """Design-based covariance of the coefficients, H^-1 G H^-1."""
    if not model.converged:
        raise ModelError("sandwich variance requires a converged model")
    hess, g = _score_parts(model, frame)
    try:
        hinv = np.linalg.inv(hess)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"singular information matrix: {exc}") from exc
    return hinv @ g @ hinv


@dataclass(frozen=True)
class WaldResult:
    """Design-based Wald test of L beta = 0."""

    statistic: float
    df: int
    p_value: float


def wald_test(model: LogitModel, cov: np.ndarray, constraints) -> WaldResult:
    """Wald chi-square test of the constraint rows L (full row rank)."""
    constraint = np.atleast_2d(np.asarray(constraints, dtype=np.float64))
    if constraint.shape[0] == 0 or constraint.size == 0:
        raise ModelError("constraint matrix must have at least one row")
    if constraint.shape[1] != len(model.coefficients):
        raise ModelError("constraint width does not match coefficient count")
    if np.linalg.matrix_rank(constraint) < constraint.shape[0]:
        raise ModelError("constraint matrix must have full row rank")
    lb = constraint @ model.coefficients
    lvl = constraint @ cov @ constraint.T
    try:
        stat = float(lb @ np.linalg.solve(lvl, lb))
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"singular constrained covariance: {exc}") from exc
    df = constraint.shape[0]
    return WaldResult(stat, df, float(chi2.sf(stat, df)))


def design_aic_bic(model: LogitModel, cov: np.ndarray,
                   frame: DesignFrame) -> tuple[float, float]:
    """Design-adjusted AIC/BIC with p* = trace(H^-1 G).

    The BIC penalty uses log(n_eff) with n_eff from the design effect of
    the outcome, so rescaling all weights by a constant cannot change
    which of two candidate models is preferred.
    """
    if not model.converged:
        raise ModelError("information criteria require a converged model")
    hess, g = _score_parts(model, frame)
    try:
        p_star = float(np.trace(np.linalg.solve(hess, g)))
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"singular information matrix: {exc}") from exc
    daic = -2.0 * model.pseudo_loglik + 2.0 * p_star
    _, n_eff = design_effect(frame, model.outcome_name)
    dbic = -2.0 * model.pseudo_loglik + np.log(n_eff) * p_star
    return daic, dbic


def logit_trainer(features, outcome: str, weighted: bool = True):
    """CV trainer factory: returns (frame, train_rows) -> row scorer."""
    features = tuple(features)

    def train(frame: DesignFrame, train_rows: np.ndarray):
        sub = frame.take(train_rows)
        if not weighted:
            sub = sub.with_weights(np.ones(sub.n))
        model = fit_weighted_logit(sub, features, outcome)

        def score_rows(rows: np.ndarray) -> np.ndarray:
            x = np.column_stack([frame.column(f)[rows] for f in features])
            return predict(model, x)

        return score_rows

    return train


def logit_model_to_json(model: LogitModel) -> str:
    return json.dumps({
        "schema": 1,
        "type": "logit",
        "coefficients": model.coefficients.tolist(),
        "feature_names": list(model.feature_names),
        "outcome": model.outcome_name,
        "pseudo_loglik": model.pseudo_loglik,
        "iterations": model.iterations,
        "converged": model.converged,
    })


def logit_model_from_json(text: str) -> LogitModel:
    blob = json.loads(text)
    if blob.get("type") != "logit" or blob.get("schema") != 1:
        raise ModelError("not a schema-1 logit model document")
    return LogitModel(
        coefficients=np.asarray(blob["coefficients"], dtype=np.float64),
        pseudo_loglik=float(blob["pseudo_loglik"]),
        iterations=int(blob["iterations"]),
        converged=bool(blob["converged"]),
        feature_names=tuple(blob["feature_names"]),
        outcome_name=blob["outcome"],
        rows_used=np.empty(0, dtype=np.intp),
        insample_scores=np.empty(0),
    )
