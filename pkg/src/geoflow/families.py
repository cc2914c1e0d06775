"""Finite parametric families: score, information matrix, estimator bounds, MLE.

Families are finite sample spaces with probabilities smooth in a real
parameter vector.  Derivatives are analytic when supplied, otherwise
central finite differences.  The estimator-covariance bound is
implemented in the classical convention cov(est) >= inverse(information
matrix) for unbiased estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import BiasError, DomainError, NonConvergenceError, SingularMatrixError

PROB_SUM_TOL = 1e-12
FD_STEP = 1e-6


@dataclass(frozen=True)
class DiscreteFamily:
    """Finite sample space with probabilities parameterized by theta.

    prob(theta) returns the (m,) probability vector over outcomes;
    dprob(theta), when given, returns the (m, d) matrix of analytic
    partial derivatives.  theta_bounds are open-box bounds per component
    used by the likelihood maximizer.
    """

    outcomes: tuple
    prob: callable
    dim: int
    dprob: callable = None
    theta_bounds: tuple = ()
    name: str = ""

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def probabilities(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise DomainError(f"theta must have dimension {self.dim}")
        p = np.asarray(self.prob(theta), dtype=float)
        if p.shape != (self.size,):
            raise DomainError("probability vector has wrong length")
        if np.any(p < -PROB_SUM_TOL):
            raise DomainError("negative probability")
        if abs(p.sum() - 1.0) > PROB_SUM_TOL:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        return p

    def derivatives(self, theta) -> np.ndarray:
        """(m, d) matrix of dp/dtheta, analytic or central finite differences."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.dprob is not None:
            dp = np.asarray(self.dprob(theta), dtype=float)
            return dp.reshape(self.size, self.dim)
        dp = np.empty((self.size, self.dim))
        for j in range(self.dim):
            h = FD_STEP * max(1.0, abs(theta[j]))
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            dp[:, j] = (self.probabilities(tp) - self.probabilities(tm)) / (2.0 * h)
        return dp


@dataclass(frozen=True)
class Estimator:
    """Map from outcomes to parameter estimates: an (m, d) value table."""

    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[0] == 1 and vals.shape[1] > 1:
            vals = vals.T
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def score(family: DiscreteFamily, theta) -> np.ndarray:
    """Per-outcome score vectors d(log p)/d(theta), an (m, d) table.

    Outcomes of zero probability with a nonzero derivative are a domain
    error; zero-probability outcomes with zero derivative score zero.
    """
    p = family.probabilities(theta)
    dp = family.derivatives(theta)
    v = np.zeros_like(dp)
    zero = p <= 0.0
    if np.any(zero & np.any(np.abs(dp) > PROB_SUM_TOL, axis=1)):
        raise DomainError("zero-probability outcome with nonzero derivative")
    nz = ~zero
    v[nz] = dp[nz] / p[nz, None]
    return v


def score_expectation(family: DiscreteFamily, theta) -> np.ndarray:
    p = family.probabilities(theta)
    return p @ score(family, theta)


def fisher_matrix(family: DiscreteFamily, theta) -> np.ndarray:
    """Information matrix sum_x p(x) V(x) V(x)^T; symmetric PSD."""
    p = family.probabilities(theta)
    v = score(family, theta)
    return (v * p[:, None]).T @ v


def estimator_mean(family: DiscreteFamily, est: Estimator, theta) -> np.ndarray:
    p = family.probabilities(theta)
    return p @ est.values


def estimator_cov(family: DiscreteFamily, est: Estimator, theta) -> np.ndarray:
    p = family.probabilities(theta)
    centered = est.values - estimator_mean(family, est, theta)
    return (centered * p[:, None]).T @ centered


def cramer_rao_gap(family: DiscreteFamily, est: Estimator, theta,
                   bias_tol: float = 1e-8) -> np.ndarray:
    """cov(est) minus the inverse information matrix; PSD for unbiased estimators."""
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    bias = estimator_mean(family, est, theta) - theta_arr
    if np.any(np.abs(bias) > bias_tol):
        raise BiasError(f"estimator is biased by {bias}", bias=bias)
    info = fisher_matrix(family, theta)
    if np.linalg.cond(info) > 1e12:
        raise SingularMatrixError("information matrix is singular to working precision")
    return estimator_cov(family, est, theta) - np.linalg.inv(info)


@dataclass
class MleResult:
    theta: np.ndarray
    log_likelihood: float
    grad_norm: float
    iterations: int
    converged: bool
    boundary: bool = False


def _loglik_and_derivs(family: DiscreteFamily, weights: np.ndarray, theta):
    p = family.probabilities(theta)
    active = weights > 0
    if np.any(p[active] <= 0.0):
        return -np.inf, None, None
    v = score(family, theta)
    ll = float(np.sum(weights[active] * np.log(p[active])))
    grad = weights @ v
    # Hessian of sum w log p: sum w (p''/p - (p'/p)^2); second derivative of p
    # by finite differences of the analytic/fd first derivatives.
    d = family.dim
    hess = np.zeros((d, d))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    for j in range(d):
        h = FD_STEP * max(1.0, abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        vp = weights @ score(family, tp)
        vm = weights @ score(family, tm)
        hess[:, j] = (vp - vm) / (2.0 * h)
    hess = 0.5 * (hess + hess.T)
    return ll, grad, hess


def mle(family: DiscreteFamily, weights, theta0=None, grad_tol: float = 1e-9,
        max_iter: int = 200) -> MleResult:
    """Maximize the weighted log-likelihood by safeguarded Newton.

    Iterates are clipped into the family's open parameter box; an optimum
    pinned against the box is reported with boundary=True rather than a
    stationarity certificate.  One-dimensional problems fall back to
    bisection on the gradient when Newton stalls.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (family.size,):
        raise DomainError("weights must assign one value per outcome")
    if not family.theta_bounds:
        raise DomainError("family must declare parameter bounds for the maximizer")
    lo = np.array([b[0] for b in family.theta_bounds])
    hi = np.array([b[1] for b in family.theta_bounds])
    margin = 1e-12
    if theta0 is None:
        theta = 0.5 * (lo + hi)
    else:
        theta = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    theta = np.clip(theta, lo + margin, hi - margin)

    ll, grad, hess = _loglik_and_derivs(family, weights, theta)
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        on_boundary = np.any(theta <= lo + 10 * margin) or np.any(theta >= hi - 10 * margin)
        if gnorm <= grad_tol:
            return MleResult(theta, ll, gnorm, it, True, boundary=bool(on_boundary))
        try:
            direction = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            direction = grad.copy()
        if grad @ direction <= 0:  # not an ascent direction; use gradient
            direction = grad.copy()
        step = 1.0
        improved = False
        for _ in range(60):
            cand = np.clip(theta + step * direction, lo + margin, hi - margin)
            cand_ll, cand_grad, cand_hess = _loglik_and_derivs(family, weights, cand)
            if cand_ll > ll or (cand_ll == ll and np.linalg.norm(cand_grad) < gnorm):
                theta, ll, grad, hess = cand, cand_ll, cand_grad, cand_hess
                improved = True
                break
            step *= 0.5
        if not improved:
            if family.dim == 1:
                result = _bisect_1d(family, weights, lo[0] + margin, hi[0] - margin, grad_tol)
                if result is not None:
                    return result
            pinned = np.any(theta <= lo + 10 * margin) or np.any(theta >= hi - 10 * margin)
            if pinned:
                return MleResult(theta, ll, gnorm, it, True, boundary=True)
            raise NonConvergenceError(
                "likelihood maximizer stalled", history=[gnorm], best=theta
            )
    raise NonConvergenceError("likelihood maximizer exhausted its budget",
                              history=[float(np.linalg.norm(grad))], best=theta)


def _bisect_1d(family, weights, lo, hi, grad_tol):
    def g(x):
        _, grad, _ = _loglik_and_derivs(family, weights, np.array([x]))
        return float(grad[0])
    ga, gb = g(lo), g(hi)
    if ga <= 0.0:  # decreasing from the left edge: boundary optimum at lo
        return MleResult(np.array([lo]), _loglik_and_derivs(family, weights, np.array([lo]))[0],
                         abs(ga), 1, True, boundary=True)
    if gb >= 0.0:
        return MleResult(np.array([hi]), _loglik_and_derivs(family, weights, np.array([hi]))[0],
                         abs(gb), 1, True, boundary=True)
    a, b = lo, hi
    for it in range(200):
        mid = 0.5 * (a + b)
        gm = g(mid)
        if abs(gm) <= grad_tol:
            ll, grad, _ = _loglik_and_derivs(family, weights, np.array([mid]))
            return MleResult(np.array([mid]), ll, abs(gm), it, True, False)
        if gm > 0:
            a = mid
        else:
            b = mid
    return None


# ---------------------------------------------------------------------------
# Built-in families


def bernoulli() -> DiscreteFamily:
    """Outcomes (failure, success) with success probability theta[0]."""
    def prob(t):
        p = t[0]
        return np.array([1.0 - p, p])

    def dprob(t):
        return np.array([[-1.0], [1.0]])

    return DiscreteFamily(outcomes=(0, 1), prob=prob, dprob=dprob, dim=1,
                          theta_bounds=((1e-9, 1.0 - 1e-9),), name="bernoulli")


def binomial(n: int) -> DiscreteFamily:
    """Success counts 0..n of n independent trials with probability theta[0]."""
    ks = np.arange(n + 1)
    coef = np.array([comb(n, int(k)) for k in ks], dtype=float)

    def prob(t):
        p = t[0]
        return coef * p**ks * (1.0 - p) ** (n - ks)

    def dprob(t):
        p = t[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            d = coef * (
                ks * p ** np.maximum(ks - 1, 0) * (1.0 - p) ** (n - ks)
                - (n - ks) * p**ks * (1.0 - p) ** np.maximum(n - ks - 1, 0)
            )
        return d.reshape(-1, 1)

    return DiscreteFamily(outcomes=tuple(int(k) for k in ks), prob=prob, dprob=dprob,
                          dim=1, theta_bounds=((1e-9, 1.0 - 1e-9),), name=f"binomial-{n}")


def bernoulli_sequence(n: int) -> DiscreteFamily:
    """All 2^n length-n toss sequences, product Bernoulli(theta[0])."""
    seqs = [tuple((i >> b) & 1 for b in range(n)) for i in range(2**n)]
    counts = np.array([sum(s) for s in seqs], dtype=float)

    def prob(t):
        p = t[0]
        return p**counts * (1.0 - p) ** (n - counts)

    def dprob(t):
        p = t[0]
        d = (
            counts * p ** np.maximum(counts - 1, 0) * (1.0 - p) ** (n - counts)
            - (n - counts) * p**counts * (1.0 - p) ** np.maximum(n - counts - 1, 0)
        )
        return d.reshape(-1, 1)

    return DiscreteFamily(outcomes=tuple(seqs), prob=prob, dprob=dprob, dim=1,
                          theta_bounds=((1e-9, 1.0 - 1e-9),), name=f"bernoulli-seq-{n}")


def categorical(k: int) -> DiscreteFamily:
    """k outcomes with free probabilities theta[0..k-2]; the last is the remainder."""
    if k < 2:
        raise DomainError("categorical families need at least two outcomes")

    def prob(t):
        out = np.empty(k)
        out[: k - 1] = t
        out[k - 1] = 1.0 - t.sum()
        return out

    def dprob(t):
        d = np.zeros((k, k - 1))
        d[: k - 1, :] = np.eye(k - 1)
        d[k - 1, :] = -1.0
        return d

    bounds = tuple((1e-9, 1.0 - 1e-9) for _ in range(k - 1))
    return DiscreteFamily(outcomes=tuple(range(k)), prob=prob, dprob=dprob,
                          dim=k - 1, theta_bounds=bounds, name=f"categorical-{k}")


BUILTIN_FAMILIES = {
    "bernoulli": lambda params: bernoulli(),
    "binomial-n": lambda params: binomial(int(params["n"])),
    "categorical-k": lambda params: categorical(int(params["k"])),
}


def make_family(name: str, params: dict | None = None) -> DiscreteFamily:
    params = params or {}
    if name not in BUILTIN_FAMILIES:
        raise DomainError(f"unknown family {name!r}; known: {sorted(BUILTIN_FAMILIES)}")
    return BUILTIN_FAMILIES[name](params)


def unbiased_estimator_grid(family: DiscreteFamily, theta, base: Estimator,
                            n_directions: int = 2, amplitudes=(-1.0, -0.5, 0.5, 1.0),
                            seed: int = 0):
    """Deterministic grid of unbiased estimators around a base estimator.

    Unbiasedness at theta is an affine constraint p^T est = theta; the
    grid spans random directions drawn from its null space, so every
    member stays exactly unbiased.
    """
    p = family.probabilities(theta)
    rng = np.random.default_rng(seed)
    # Orthonormal basis of the null space of p^T.
    q, _ = np.linalg.qr(np.column_stack([p, rng.standard_normal((family.size, family.size - 1))]))
    null = q[:, 1:]
    directions = [null @ rng.standard_normal(null.shape[1]) for _ in range(n_directions)]
    grid = [base]
    for d_idx, direction in enumerate(directions):
        direction = direction / np.linalg.norm(direction)
        for amp in amplitudes:
            for j in range(family.dim):
                vals = base.values.copy()
                vals[:, j] = vals[:, j] + amp * direction
                grid.append(Estimator(vals, name=f"{base.name}+d{d_idx}a{amp}c{j}"))
    return grid


def shannon_entropy(probs) -> float:
    """Entropy -sum p log p of a finite scheme (zero-probability terms drop)."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("scheme probabilities must be nonnegative and sum to 1")
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def conditional_entropy(p_a, q_cond) -> float:
    """Average over scheme A of the entropy of B given each event of A."""
    p_a = np.asarray(p_a, dtype=float)
    q = np.asarray(q_cond, dtype=float)
    return float(sum(p_a[i] * shannon_entropy(q[i]) for i in range(len(p_a))))
