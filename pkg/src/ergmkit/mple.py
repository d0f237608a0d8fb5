"""Maximum pseudolikelihood estimation.

The pseudolikelihood treats the tie indicators as independent logistic
responses with the change-statistic vectors as covariates: one row per
dyad, response = observed tie, covariates = change statistics with the
rest of the network held at its observed values.  The MPLE is the
maximizer of that logistic likelihood, fit by damped Newton (IRLS) with
step halving from theta = 0.

The reported covariance is the inverse observed information of the
logistic fit.  It is NOT a valid MLE covariance (the independence
assumption is misspecified); downstream estimation uses only theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _kernels
from .network import Network, dyad_arrays
from .stats import ModelSpec

__all__ = [
    "MpleResult",
    "MpleError",
    "SeparationDetected",
    "SingularInformation",
    "design_rows",
    "mple",
    "mple_cloud",
]

THETA_SUP_LIMIT = 50.0  # |eta| beyond this gives probabilities that are 0/1 in float64
MAX_HALVINGS = 30


class MpleError(RuntimeError):
    pass


class SeparationDetected(MpleError):
    """The logistic fit diverges: perfect or quasi-perfect separation."""


class SingularInformation(MpleError):
    """Rank-deficient information matrix (collinear statistics)."""


@dataclass
class MpleResult:
    theta: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float


def design_rows(spec: ModelSpec, net: Network) -> tuple[np.ndarray, np.ndarray]:
    """(responses, covariates): one row per dyad {i,j}, i < j, in linear
    dyad order.  responses is uint8, covariates float64 (dyads x q)."""
    tbl = spec.compiled(net.n)
    rows, cols = dyad_arrays(net.n)
    x = np.empty((rows.size, spec.q), dtype=np.float64)
    y = np.empty(rows.size, dtype=np.uint8)
    _kernels.design_matrix(
        tbl.dgain, tbl.nweight, tbl.is_triangle,
        net.words, net.degrees(), rows, cols, x, y,
    )
    return y, x


def _logistic_loglik(y: np.ndarray, eta: np.ndarray) -> float:
    # sum_i [y eta - log(1 + e^eta)], stable for large |eta|
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def mple(
    spec: ModelSpec,
    net: Network,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> MpleResult:
    """Fit the MPLE by damped Newton; score sup-norm <= tol at convergence.

    Raises SeparationDetected when the optimizer diverges (parameter
    sup-norm past 50, step halving exhausted, or constant responses) and
    SingularInformation when the information matrix is rank-deficient.
    """
    y, x = design_rows(spec, net)
    yf = y.astype(np.float64)
    if y.min() == y.max():
        raise SeparationDetected(
            "all dyads have the same tie value; the pseudolikelihood has no maximizer"
        )

    theta = np.zeros(spec.q)
    eta = x @ theta
    ll = _logistic_loglik(yf, eta)
    score_sup = np.inf
    for it in range(1, max_iter + 1):
        p = expit(eta)
        grad = x.T @ (yf - p)
        score_sup = float(np.abs(grad).max())
        if score_sup <= tol:
            _reject_perfect_classification(yf, eta)
            return MpleResult(
                theta=theta,
                covariance=_inverse_information(x, p),
                converged=True,
                iterations=it - 1,
                max_abs_score=score_sup,
            )
        w = p * (1.0 - p)
        info = (x * w[:, None]).T @ x
        step = _solve_information(info, grad)
        if score_sup <= 1e-5:
            # quadratic zone: likelihood gains are below float resolution,
            # so step halving would stall; plain Newton converges here
            theta = theta + step
        else:
            alpha = 1.0
            for halving in range(MAX_HALVINGS + 1):
                cand = theta + alpha * step
                ll_new = _logistic_loglik(yf, x @ cand)
                if ll_new > ll or (ll_new == ll and alpha == 1.0):
                    break
                alpha *= 0.5
            else:
                raise SeparationDetected(
                    f"step halving failed {MAX_HALVINGS} times at score {score_sup:.3g}"
                )
            theta = theta + alpha * step
        if np.abs(theta).max() > THETA_SUP_LIMIT:
            raise SeparationDetected(
                f"parameter sup-norm exceeded {THETA_SUP_LIMIT:g}; responses are separable"
            )
        eta = x @ theta
        ll = _logistic_loglik(yf, eta)

    p = expit(eta)
    grad = x.T @ (yf - p)
    return MpleResult(
        theta=theta,
        covariance=_inverse_information(x, p),
        converged=False,
        iterations=max_iter,
        max_abs_score=float(np.abs(grad).max()),
    )


def _reject_perfect_classification(yf: np.ndarray, eta: np.ndarray) -> None:
    # a finite maximizer never classifies perfectly (scaling theta up would
    # still increase the likelihood), so a "converged" fit with every
    # probability numerically at its response is quasi-separation: the
    # score only vanished because the logistic tails underflowed
    margin = eta * (2.0 * yf - 1.0)
    if margin.min() > 13.8:  # sigma(13.8) = 1 - 1e-6
        raise SeparationDetected(
            "perfect classification: every fitted probability is within "
            "1e-6 of its response"
        )


def _solve_information(info: np.ndarray, grad: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(info)
    if eig[0] <= 1e-12 * max(1.0, eig[-1]):
        raise SingularInformation(
            f"information matrix is numerically singular (eigenvalues {eig})"
        )
    return np.linalg.solve(info, grad)


def _inverse_information(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    w = p * (1.0 - p)
    info = (x * w[:, None]).T @ x
    return np.linalg.inv(info)


def mple_cloud(
    spec: ModelSpec, nets: list[Network]
) -> list[MpleResult | MpleError]:
    """Per-network MPLEs with failures recorded, not raised.

    Entries are MpleResult on success or the caught MpleError otherwise
    (other exceptions propagate).  All networks must share a node count.
    """
    if nets:
        n0 = nets[0].n
        for net in nets:
            if net.n != n0:
                raise ValueError("all networks in a cloud must share the node count")
    out: list[MpleResult | MpleError] = []
    for net in nets:
        try:
            out.append(mple(spec, net))
        except MpleError as exc:
            out.append(exc)
    return out
