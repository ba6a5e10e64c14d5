"""Asymptotic Gaussian-covariate P-values beyond least squares.

Three objectives are covered: Huber M-regression, non-linear least squares
``y ~ g(X beta)`` and the Kullback-Leibler (deviance) criterion for logistic
regression.  In each case a second-order expansion shows that the decrease
of the objective caused by a Gaussian covariate is a scaled chi-squared(1)
variable, which gives a P-value of the form::

    1 - (1 - chisq_sf(stat, 1)) ** (q - m0)
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DomainError, SeparationError
from .selection import SelectionTrace, Step
from .specfun import chisq_sf

__all__ = [
    "HuberLoss",
    "RobustFit",
    "m_fit",
    "m_step_pvalue",
    "scale_update",
    "initial_scale",
    "Link",
    "IDENTITY",
    "LOGISTIC",
    "NonlinearFit",
    "nonlinear_fit",
    "nonlinear_step_pvalue",
    "LogisticFit",
    "logistic_fit",
    "kl_logistic_pvalue",
    "robust_stepwise",
    "kl_stepwise",
    "MAD_FACTOR",
]

MAD_FACTOR = 1.4826


def _chisq_power_pvalue(stat, pool):
    """``1 - (1 - P(chi2_1 >= stat)) ** pool``."""
    if pool < 1:
        raise DomainError("q - m0 must be at least 1")
    stat = max(float(stat), 0.0)
    tail = float(chisq_sf(stat, 1.0))
    if tail >= 1.0:
        return 1.0
    return float(min(1.0, -math.expm1(pool * math.log1p(-tail))))


def _design(data, subset):
    if not subset:
        return np.zeros((data.n, 0))
    return np.column_stack([data.column(j) for j in subset])


class HuberLoss:
    """Huber's function: quadratic on ``[-c, c]`` and linear outside.

    Parameters
    ----------
    c : float, default=1.0
        Tuning constant.
    """

    def __init__(self, c=1.0):
        if not c > 0:
            raise DomainError("the Huber constant must be positive")
        self.c = float(c)

    def rho(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        c = self.c
        return np.where(u <= c, 0.5 * u * u, c * u - 0.5 * c * c)

    def psi(self, u):
        return np.clip(np.asarray(u, dtype=float), -self.c, self.c)

    def psi_prime(self, u):
        return (np.abs(np.asarray(u, dtype=float)) <= self.c).astype(float)

    def weight(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        with np.errstate(divide="ignore"):
            return np.where(u <= self.c, 1.0, self.c / u)

    @property
    def c_f(self):
        """Fisher consistency factor ``E psi(Z)^2`` for standard normal Z."""
        c = self.c
        phi = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
        inner = math.erf(c / math.sqrt(2.0))  # 2 Phi(c) - 1
        upper = 0.5 * math.erfc(c / math.sqrt(2.0))  # 1 - Phi(c)
        return inner - 2.0 * c * phi + 2.0 * c * c * upper

    def __repr__(self):
        return f"HuberLoss(c={self.c:g})"


@dataclass
class RobustFit:
    """Huber M-regression fit at a fixed scale.

    ``s0`` is the mean loss, ``s0_d1`` the mean squared first derivative and
    ``s0_d2`` the sum of second derivatives, all at the scaled residuals.
    """

    coefficients: np.ndarray
    scale: float
    s0: float
    s0_d1: float
    s0_d2: float
    residuals: np.ndarray = field(repr=False)
    subset: tuple = ()
    iterations: int = 0


def _robust_summary(loss, resid, sigma, subset, beta, iterations):
    u = resid / sigma
    psi = loss.psi(u)
    return RobustFit(
        coefficients=beta,
        scale=float(sigma),
        s0=float(np.mean(loss.rho(u))),
        s0_d1=float(np.mean(psi * psi)),
        s0_d2=float(np.sum(loss.psi_prime(u))),
        residuals=resid,
        subset=tuple(subset),
        iterations=iterations,
    )


def m_fit(data, subset, loss=None, sigma=1.0, beta0=None, maxiter=500):
    """Minimize the mean Huber loss of ``(y - X beta) / sigma``.

    Iteratively reweighted least squares, with a Newton step on the current
    quadratic set tried first; every accepted step decreases the objective.

    Raises
    ------
    ConvergenceError
        If the first-order condition is not met within ``maxiter`` steps.
    """
    loss = HuberLoss() if loss is None else loss
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    subset = tuple(subset)
    y = data.y
    n = data.n
    X = _design(data, subset)
    if X.shape[1] == 0:
        return _robust_summary(loss, y.copy(), sigma, subset, np.zeros(0), 0)
    rms = np.sqrt(np.mean(X * X, axis=0))
    rms[rms == 0] = 1.0
    Xs = X / rms

    def objective(b):
        return float(np.mean(loss.rho((y - Xs @ b) / sigma)))

    if beta0 is None:
        b, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    else:
        b = np.asarray(beta0, dtype=float) * rms
    f = objective(b)
    tol = 1e-8 * n
    for it in range(1, maxiter + 1):
        r = y - Xs @ b
        u = r / sigma
        grad = Xs.T @ loss.psi(u)
        if np.max(np.abs(grad)) <= tol:
            return _robust_summary(loss, r, sigma, subset, b / rms, it - 1)
        candidates = []
        active = loss.psi_prime(u) > 0
        if active.sum() >= Xs.shape[1]:
            Xa = Xs[active]
            step, *_ = np.linalg.lstsq(Xa.T @ Xa, sigma * grad, rcond=None)
            candidates.append(step)
        w = loss.weight(u)
        sw = np.sqrt(w)
        b_irls, *_ = np.linalg.lstsq(Xs * sw[:, None], y * sw, rcond=None)
        candidates.append(b_irls - b)
        moved = False
        for step in candidates:
            t = 1.0
            for _ in range(40):
                b_new = b + t * step
                f_new = objective(b_new)
                if f_new < f:
                    b, f = b_new, f_new
                    moved = True
                    break
                t *= 0.5
            if moved:
                break
        if not moved:
            # no descent direction left at working precision
            r = y - Xs @ b
            return _robust_summary(loss, r, sigma, subset, b / rms, it)
    r = y - Xs @ b
    raise ConvergenceError(
        f"M-regression did not converge in {maxiter} iterations",
        iterations=maxiter,
        residual=float(np.max(np.abs(Xs.T @ loss.psi(r / sigma)))),
    )


def m_step_pvalue(fit0, s_nu, q, m0):
    """P-value for the covariate whose inclusion lowers the mean loss to ``s_nu``.

    Parameters
    ----------
    fit0 : RobustFit
        Fit of the current model with ``m0`` columns.
    s_nu : float
        Mean loss after adding the candidate, at the same scale.
    q : int
        Number of columns available; ``q - m0`` candidates compete.
    m0 : int
    """
    if s_nu < 0:
        raise DomainError("s_nu must be non-negative")
    if s_nu > fit0.s0 * (1.0 + 1e-12) + 1e-300:
        raise DomainError("s_nu must not exceed s0")
    if fit0.s0_d1 <= 0:
        return 1.0
    stat = 2.0 * fit0.s0_d2 / fit0.s0_d1 * (fit0.s0 - min(s_nu, fit0.s0))
    return _chisq_power_pvalue(stat, int(q) - int(m0))


def scale_update(residuals, sigma0, loss=None, m0=0):
    """Updated scale after a covariate is included.

    ``sigma1^2 = sigma0^2 * sum psi(r / sigma0)^2 / ((n - m0 - 1) c_f)``.
    """
    loss = HuberLoss() if loss is None else loss
    r = np.asarray(residuals, dtype=float)
    n = r.shape[0]
    if n <= m0 + 1:
        raise DomainError("need more residuals than m0 + 1")
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    psi = loss.psi(r / sigma0)
    s2 = sigma0 * sigma0 * float(psi @ psi) / ((n - m0 - 1) * loss.c_f)
    sigma1 = math.sqrt(s2)
    if sigma1 <= 0.0:
        warnings.warn("degenerate scale (all residuals zero); flooring", RuntimeWarning, stacklevel=2)
        sigma1 = 1e-12 * sigma0
    return sigma1


def initial_scale(y):
    """Median absolute deviation of ``y`` times 1.4826."""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise DomainError("need at least two observations")
    mad = float(np.median(np.abs(y - np.median(y))))
    if mad <= 0.0:
        raise DomainError("median absolute deviation is zero")
    return MAD_FACTOR * mad


@dataclass(frozen=True)
class Link:
    """Inverse link ``g`` together with its derivative."""

    name: str
    g: object
    g1: object


def _expit(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _expit_d1(u):
    p = _expit(u)
    return p * (1.0 - p)


IDENTITY = Link("identity", lambda u: np.asarray(u, dtype=float), lambda u: np.ones_like(np.asarray(u, dtype=float)))
LOGISTIC = Link("logistic", _expit, _expit_d1)


@dataclass
class NonlinearFit:
    coefficients: np.ndarray
    ss: float
    eta: np.ndarray = field(repr=False)
    subset: tuple = ()


def nonlinear_fit(data, subset, link=IDENTITY, beta0=None, maxiter=200, tol=1e-12):
    """Least squares for ``y ~ g(X beta)`` by damped Gauss-Newton.

    ``ss`` is the residual sum of squares (a sum, not a mean).
    """
    subset = tuple(subset)
    y = data.y
    X = _design(data, subset)
    p = X.shape[1]
    b = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    if p == 0:
        eta = np.zeros(data.n)
        r = y - link.g(eta)
        return NonlinearFit(b, float(r @ r), eta, subset)
    if link is IDENTITY and beta0 is None:
        b, *_ = np.linalg.lstsq(X, y, rcond=None)
    eta = X @ b
    r = y - link.g(eta)
    ss = float(r @ r)
    for _ in range(maxiter):
        J = X * link.g1(eta)[:, None]
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        t = 1.0
        improved = False
        for _ in range(50):
            b_new = b + t * step
            eta_new = X @ b_new
            r_new = y - link.g(eta_new)
            ss_new = float(r_new @ r_new)
            if ss_new <= ss:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        done = ss - ss_new <= tol * max(ss, 1e-300)
        b, eta, r, ss = b_new, eta_new, r_new, ss_new
        if done:
            break
    else:
        raise ConvergenceError(f"Gauss-Newton did not converge in {maxiter} iterations", iterations=maxiter)
    return NonlinearFit(b, ss, eta, subset)


def nonlinear_step_pvalue(data, subset, link, drop, q, m0, fit0=None):
    """P-value for a candidate lowering the sum of squares by ``drop``.

    Parameters
    ----------
    data : Dataset
    subset : sequence of int
        Current model ``M0``.
    link : Link
    drop : float
        ``ss0 - ss_nu`` as sums of squares.
    q, m0 : int
        Available columns and current model size.
    fit0 : NonlinearFit, optional
        Fit of ``subset``; computed when omitted.
    """
    if drop < 0:
        raise DomainError("the drop in sum of squares must be non-negative")
    if fit0 is None:
        fit0 = nonlinear_fit(data, subset, link)
    g1 = link.g1(fit0.eta)
    r = data.y - link.g(fit0.eta)
    den = float(np.sum(g1 * g1))
    num = float(np.sum(r * r * g1 * g1))
    if den <= 0.0 or num <= 0.0:
        raise DomainError("zero weight in the non-linear P-value")
    stat = drop / (num / den)
    return _chisq_power_pvalue(stat, int(q) - int(m0))


@dataclass
class LogisticFit:
    coefficients: np.ndarray
    kl: float
    p: np.ndarray = field(repr=False)
    subset: tuple = ()


def _kl(y, eta):
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def logistic_fit(data, subset, candidate=None, maxiter=100, eta_max=40.0):
    """Logistic maximum likelihood by damped Newton with step halving.

    ``kl`` is the Kullback-Leibler discrepancy (half the deviance for 0-1
    data).

    Raises
    ------
    SeparationError
        When the estimate runs off to infinity.  ``candidate`` is reported in
        the error.
    """
    subset = tuple(subset)
    y = data.y
    X = _design(data, subset)
    p_dim = X.shape[1]
    b = np.zeros(p_dim)
    eta = np.zeros(data.n)
    f = _kl(y, eta)
    if p_dim == 0:
        return LogisticFit(b, f, _expit(eta), subset)
    for _ in range(maxiter):
        p = _expit(eta)
        grad = X.T @ (y - p)
        w = p * (1.0 - p)
        H = X.T @ (X * w[:, None])
        step, *_ = np.linalg.lstsq(H, grad, rcond=None)
        t = 1.0
        for _ in range(50):
            b_new = b + t * step
            eta_new = X @ b_new
            f_new = _kl(y, eta_new)
            if f_new <= f:
                break
            t *= 0.5
        else:
            break
        if np.max(np.abs(eta_new)) > eta_max:
            raise SeparationError(candidate)
        converged = f - f_new <= 1e-12 * max(f, 1.0) and np.max(np.abs(t * step)) < 1e-8 * (1 + np.max(np.abs(b)))
        b, eta, f = b_new, eta_new, f_new
        if converged:
            break
    else:
        raise SeparationError(candidate, "logistic fit did not converge; the data may be separated")
    p = _expit(eta)
    if np.any(p <= 1e-15) or np.any(p >= 1 - 1e-15):
        raise SeparationError(candidate)
    return LogisticFit(b, f, p, subset)


def _check_binary(y):
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("the response must be 0-1")


def kl_logistic_pvalue(data, subset, candidate, q, m0=None, fit0=None):
    """P-value of ``candidate`` for the logistic Kullback-Leibler criterion."""
    _check_binary(data.y)
    subset = tuple(subset)
    m0 = len(subset) if m0 is None else m0
    if fit0 is None:
        fit0 = logistic_fit(data, subset)
    fit1 = logistic_fit(data, subset + (candidate,), candidate=candidate)
    p0 = fit0.p
    den = float(np.sum((data.y - p0) ** 2))
    if den <= 0:
        raise DomainError("zero weight in the Kullback-Leibler P-value")
    drop = max(fit0.kl - fit1.kl, 0.0)
    stat = 2.0 * float(np.sum(p0 * (1.0 - p0))) / den * drop
    return _chisq_power_pvalue(stat, int(q) - int(m0))


def robust_stepwise(data, alpha=0.01, loss=None, max_steps=None):
    """Forward selection with the Huber M-regression P-value.

    The scale starts at ``1.4826 * MAD(y)`` and is updated after every
    inclusion.  ``rss_after`` in the returned steps holds the mean loss.
    """
    loss = HuberLoss() if loss is None else loss
    n = data.n
    q_total = data.q + len(data.forced)
    sigma = initial_scale(data.y)
    model = list(data.forced)
    fit0 = m_fit(data, model, loss, sigma)
    trace = SelectionTrace(rss0=fit0.s0, n=n, q=q_total)
    for i in model:
        trace.steps.append(Step(i, data.label(i), float("nan"), fit0.s0, forced=True))
    while max_steps is None or len(trace) < max_steps:
        if len(model) >= n - 2 or q_total - len(model) < 1:
            trace.terminated = "exhausted"
            break
        best = None
        for j in range(1, data.q + 1):
            if j in model:
                continue
            s = m_fit(data, model + [j], loss, sigma, beta0=np.append(fit0.coefficients, 0.0)).s0
            if best is None or s < best[1]:
                best = (j, s)
        if best is None:
            trace.terminated = "exhausted"
            break
        j, s = best
        p = m_step_pvalue(fit0, min(s, fit0.s0), q_total, len(model))
        if p > alpha:
            trace.rejected = Step(j, data.label(j), p, s)
            trace.terminated = "threshold"
            break
        m0 = len(model)
        model.append(j)
        fit1 = m_fit(data, model, loss, sigma)
        sigma = scale_update(fit1.residuals, sigma, loss, m0)
        fit0 = m_fit(data, model, loss, sigma, beta0=fit1.coefficients)
        trace.steps.append(Step(j, data.label(j), p, s, coefficient=float("nan")))
    for step, beta in zip(trace.steps, fit0.coefficients):
        step.coefficient = float(beta)
    trace.model = fit0
    return trace


def kl_stepwise(data, alpha=0.01, max_steps=None):
    """Forward selection for 0-1 responses with the Kullback-Leibler P-value.

    Candidates that separate the data are skipped with a warning and listed
    in ``trace.skipped``.
    """
    _check_binary(data.y)
    n = data.n
    q_total = data.q + len(data.forced)
    model = list(data.forced)
    fit0 = logistic_fit(data, model)
    trace = SelectionTrace(rss0=fit0.kl, n=n, q=q_total)
    for i in model:
        trace.steps.append(Step(i, data.label(i), float("nan"), fit0.kl, forced=True))
    while max_steps is None or len(trace) < max_steps:
        if len(model) >= n - 2 or q_total - len(model) < 1:
            trace.terminated = "exhausted"
            break
        best = None
        for j in range(1, data.q + 1):
            if j in model or j in trace.skipped:
                continue
            try:
                kl = logistic_fit(data, model + [j], candidate=j).kl
            except SeparationError:
                warnings.warn(f"skipping column {data.label(j)!r}: separation", RuntimeWarning, stacklevel=2)
                trace.skipped.append(j)
                continue
            if best is None or kl < best[1]:
                best = (j, kl)
        if best is None:
            trace.terminated = "exhausted"
            break
        j, kl = best
        p = kl_logistic_pvalue(data, model, j, q_total, len(model), fit0=fit0)
        if p > alpha:
            trace.rejected = Step(j, data.label(j), p, kl)
            trace.terminated = "threshold"
            break
        model.append(j)
        fit0 = logistic_fit(data, model)
        trace.steps.append(Step(j, data.label(j), p, kl))
    for step, beta in zip(trace.steps, fit0.coefficients):
        step.coefficient = float(beta)
    trace.model = fit0
    return trace
