"""
Numerical kernel: least squares with rank detection, logistic regression by
IRLS, residualization, and the exact two-sided Fisher test for 2x2 tables.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, gammaln

RANK_TOL = 1e-10
FISHER_SLACK = 1e-7
STEP_TOL = 1e-6


class CollinearityError(ValueError):
    """Design matrix is rank deficient.

    ``column`` is the index of the first column that is linearly dependent on
    the columns before it.
    """

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"design column {column} is linearly dependent on earlier columns")


class DegenerateOutcome(ValueError):
    """Data carry no contrast to estimate from (one class, one group, constant outcome)."""


class SeparationWarning(UserWarning):
    """Logistic fit diverging toward complete or quasi-complete separation."""


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    standard_errors: np.ndarray
    rank: int
    rss: float


@dataclass(frozen=True)
class LogisticFit:
    coefficients: np.ndarray
    converged: bool
    iterations: int
    fitted_probabilities: np.ndarray
    separated: bool = False


def _as_design(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def ols_fit(X, y) -> RegressionFit:
    """
    Ordinary least squares through a Householder QR factorization.

    Parameters
    ----------
    X : array_like, shape (n, k)
        Design matrix; include a column of ones for an intercept.
    y : array_like, shape (n,)

    Returns
    -------
    RegressionFit
        Coefficients in column order, residuals, classical homoskedastic
        standard errors (NaN when n == k), rank and residual sum of squares.

    Raises
    ------
    CollinearityError
        If ``|R_jj| <= 1e-10 * max|R_ii|`` for some column ``j``. The error
        names the first such column.
    """
    X, y = _as_design(X, y)
    n, k = X.shape
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")

    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = diag.max()
    bad = np.flatnonzero(diag <= RANK_TOL * scale) if scale > 0 else np.arange(k)
    if bad.size:
        raise CollinearityError(int(bad[0]))

    qty = q.T @ y
    coef = _back_substitute(r, qty)
    resid = y - X @ coef
    rss = float(resid @ resid)

    df = n - k
    if df > 0:
        r_inv = _back_substitute(r, np.eye(k))
        xtx_inv_diag = np.sum(r_inv**2, axis=1)
        se = np.sqrt(rss / df * xtx_inv_diag)
    else:
        se = np.full(k, np.nan)
    return RegressionFit(coef, resid, se, k, rss)


def _back_substitute(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    return solve_triangular(r, b, lower=False)


def residualize(X_aux, v) -> np.ndarray:
    """Residuals of ``v`` after projecting onto the columns of ``X_aux``."""
    return ols_fit(X_aux, v).residuals


def _bernoulli_loglik(eta: np.ndarray, y: np.ndarray) -> float:
    # log p = -log(1 + e^-eta), log(1-p) = -log(1 + e^eta)
    return float(-(y * np.logaddexp(0.0, -eta) + (1.0 - y) * np.logaddexp(0.0, eta)).sum())


def logistic_fit(
    X,
    y,
    max_iter: int = 50,
    tol: float = 1e-8,
    separation_bound: float = 30.0,
    max_halvings: int = 8,
) -> LogisticFit:
    """
    Binomial-logit maximum likelihood by Newton/IRLS.

    Iterates until ``|X'(y - p)|_inf <= tol`` and the Newton step is
    negligible, or ``max_iter`` steps. A step
    that lowers the log likelihood is halved up to ``max_halvings`` times.
    When the coefficient norm exceeds ``separation_bound`` the fit stops,
    is returned with ``separated=True`` and a :class:`SeparationWarning` is
    issued.

    Raises
    ------
    DegenerateOutcome
        If ``y`` contains a single class.
    """
    X, y = _as_design(X, y)
    n, k = X.shape
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("y must be binary 0/1")
    if y.min() == y.max():
        raise DegenerateOutcome("logistic regression needs both outcome classes")

    beta = np.zeros(k)
    eta = X @ beta
    loglik = _bernoulli_loglik(eta, y)
    converged = False
    separated = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(eta)
        score = X.T @ (y - p)
        w = p * (1.0 - p)
        info = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        # a vanishing score alone is not enough: under separation the score
        # decays while the Newton step stays O(1)
        if np.max(np.abs(score)) <= tol and np.max(np.abs(step)) <= STEP_TOL * (1.0 + np.max(np.abs(beta))):
            converged = True
            it -= 1
            break

        for _ in range(max_halvings + 1):
            cand = beta + step
            cand_eta = X @ cand
            cand_ll = _bernoulli_loglik(cand_eta, y)
            if cand_ll >= loglik - 1e-12 * abs(loglik):
                break
            step = step / 2.0
        beta, eta, loglik = cand, cand_eta, cand_ll

        if np.linalg.norm(beta) > separation_bound:
            separated = True
            break

    if separated:
        warnings.warn(
            f"coefficient norm exceeded {separation_bound}; data look separated",
            SeparationWarning,
            stacklevel=2,
        )
    return LogisticFit(
        coefficients=beta,
        converged=converged,
        iterations=it,
        fitted_probabilities=expit(eta),
        separated=separated,
    )


def _log_choose(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def fisher_exact_2x2(a: int, b: int, c: int, d: int) -> tuple[float, float]:
    """
    Two-sided Fisher exact test for the table ``[[a, b], [c, d]]``.

    The top-left cell is enumerated over its feasible range given the
    margins. The two-sided p-value sums every table whose hypergeometric
    probability is at most ``p_table * (1 + 1e-7)``.

    Returns
    -------
    p_two_sided, p_table : float
        Tables with an empty row or column admit a single arrangement and
        give ``(1.0, 1.0)``.
    """
    counts = [int(v) for v in (a, b, c, d)]
    if any(v < 0 for v in counts) or any(v != w for v, w in zip(counts, (a, b, c, d))):
        raise ValueError("counts must be non-negative integers")
    a, b, c, d = counts
    row1, row2, col1 = a + b, c + d, a + c
    total = row1 + row2
    if total == 0:
        raise ValueError("table has no observations")

    lo = max(0, col1 - row2)
    hi = min(row1, col1)
    x = np.arange(lo, hi + 1)
    logp = _log_choose(row1, x) + _log_choose(row2, col1 - x) - _log_choose(total, col1)
    probs = np.exp(logp)
    p_table = float(probs[a - lo])
    p_two = float(probs[probs <= p_table * (1.0 + FISHER_SLACK)].sum())
    return min(p_two, 1.0), p_table
