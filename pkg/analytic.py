"""
Analytic layer: Cauchy transforms, the h-transform, subordination and
finite-difference checks of the Burgers and h-family equations.

Series evaluation is restricted to ||b^-1|| * M < RHO_MAX so that the geometric
tail bound stays small; scalar point masses and semicircles use closed forms.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from balg import LinearMap, as_element, identity_map, imaginary_part, norm
from config import AnalyticConfig, AlgebraConfig
from series import eval_at
from transforms import (CumulantKind, Distribution, PointMass, Semicircular, bb_alpha, convolve,
                        make_distribution, moment_growth)
from utils import ArgumentError, ConvergenceError, DomainError, NumericError, check_finite, get_logger

logger = get_logger("analytic")


def _inverse(b: np.ndarray, what: str) -> np.ndarray:
    try:
        inverse = linalg.inv(b)
    except (linalg.LinAlgError, ValueError):
        raise NumericError(f"{what} is singular")
    if np.linalg.cond(b) > 1 / AlgebraConfig.ABS_FLOOR:
        raise NumericError(f"{what} is numerically singular")
    return check_finite(inverse, what)


@dataclass(frozen=True)
class UpperHalfPoint:
    """An element with Im b >= eps * 1, eps > 0."""

    b: np.ndarray
    eps: float

    @classmethod
    def of(cls, b, eps: Optional[float] = None) -> "UpperHalfPoint":
        b = as_element(b)
        margin = imag_margin(b)
        if margin <= 0:
            raise DomainError(f"Im b has minimum eigenvalue {margin:.3e}; not in the upper half-plane")
        if eps is not None and margin < eps - AlgebraConfig.TOL_EQ:
            raise DomainError(f"Im b margin {margin:.3e} below the required {eps:.3e}")
        return cls(b, margin if eps is None else eps)


def imag_margin(b: np.ndarray) -> float:
    """Minimum eigenvalue of (b - b*) / 2i."""
    return float(linalg.eigvalsh(imaginary_part(b))[0])


def _element(b) -> np.ndarray:
    return b.b if isinstance(b, UpperHalfPoint) else as_element(b)


@dataclass
class TailBound:
    M: float
    trunc: int
    r: float
    value: float

    @classmethod
    def geometric(cls, M: float, trunc: int, r: float) -> "TailBound":
        q = r * M
        if q >= 1:
            raise DomainError(f"||b^-1|| * M = {q:.3f} outside series radius")
        return cls(M, trunc, r, r * q ** (trunc + 1) / (1 - q) * (1 + r) ** 2)

    def to_dict(self):
        return {"M": self.M, "trunc": self.trunc, "r": self.r, "value": self.value}


class CauchyTransform:
    """G(b) = mu[(b - X)^-1] together with an error bound."""

    def __call__(self, b) -> Tuple[np.ndarray, float]:
        raise NotImplementedError


class SeriesCauchyTransform(CauchyTransform):
    """G(b) = x + x M_mu(x) x with x = b^-1, truncated at the stored order."""

    def __init__(self, mu: Distribution, M: Optional[float] = None):
        self.mu = mu
        self.M = moment_growth(mu) if M is None else float(M)

    def tail(self, b: np.ndarray) -> TailBound:
        r = norm(_inverse(b, "b"))
        if r * self.M >= AnalyticConfig.RHO_MAX:
            raise DomainError(f"outside series radius: ||b^-1|| * M = {r * self.M:.3f} >= {AnalyticConfig.RHO_MAX}")
        return TailBound.geometric(self.M, self.mu.trunc, r)

    def __call__(self, b):
        b = as_element(_element(b), self.mu.dim)
        bound = self.tail(b)
        x = _inverse(b, "b")
        return x + x @ eval_at(self.mu.moments, x) @ x, bound.value


class SemicircleCauchyTransform(CauchyTransform):
    """Scalar semicircle of variance v centered at c: (z - c - s) / 2v, s = sqrt((z - c)^2 - 4v), Im s > 0."""

    def __init__(self, variance: float, center: complex = 0.0):
        if variance < 0:
            raise ArgumentError(f"variance must be nonnegative, got {variance}")
        self.variance = float(variance)
        self.center = complex(center)

    def __call__(self, b):
        z = complex(as_element(_element(b), 1)[0, 0]) - self.center
        if self.variance == 0:
            return np.array([[1 / z]], dtype=complex), 0.0
        s = np.sqrt(z * z - 4 * self.variance)
        if s.imag < 0:
            s = -s
        return np.array([[(z - s) / (2 * self.variance)]], dtype=complex), 0.0


class PointMassCauchyTransform(CauchyTransform):
    """Exact resolvent (b - lambda)^-1."""

    def __init__(self, lam):
        self.lam = as_element(lam)

    def __call__(self, b):
        b = as_element(_element(b), self.lam.shape[0])
        return _inverse(b - self.lam, "b - lambda"), 0.0


def _scalar(value) -> complex:
    return complex(np.asarray(value).reshape(-1)[0])


def closed_form(mu: Distribution) -> Optional[CauchyTransform]:
    """Exact transform for scalar point masses and semicircles, None otherwise."""
    spec = mu.spec
    if isinstance(spec, PointMass):
        return PointMassCauchyTransform(spec.lam)
    if mu.dim != 1 or not isinstance(spec, Semicircular):
        return None
    variance = _scalar(spec.eta.coeffs)
    if abs(variance.imag) > AlgebraConfig.TOL_EQ or variance.real < 0:
        return None
    center = 0.0 if spec.center is None else _scalar(spec.center)
    return SemicircleCauchyTransform(variance.real, center)


def transform_for(mu: Distribution, M: Optional[float] = None, exact: bool = True) -> CauchyTransform:
    transform = closed_form(mu) if exact else None
    return transform if transform is not None else SeriesCauchyTransform(mu, M)


def cauchy_transform(mu: Distribution, b, M: Optional[float] = None, exact: bool = True) -> Tuple[np.ndarray, float]:
    """G_mu(b) and an error bound (0 for closed forms)."""
    return transform_for(mu, M, exact)(b)


def h_transform(mu: Distribution, b, M: Optional[float] = None, exact: bool = True) -> np.ndarray:
    """h_mu(b) = G_mu(b)^-1 - b."""
    b = _element(b)
    value, _ = cauchy_transform(mu, b, M, exact)
    return _inverse(value, "G(b)") - b


def _h_with_bound(transform: CauchyTransform, b: np.ndarray) -> Tuple[np.ndarray, float]:
    value, bound = transform(b)
    return _inverse(value, "G(b)") - b, bound


@dataclass
class SubordinationResult:
    omega: np.ndarray
    iterations: int
    residual: float
    min_imag_margin: float
    tail: float = 0.0

    def to_dict(self):
        return {"omega": self.omega, "iterations": self.iterations, "residual": self.residual,
                "min_imag_margin": self.min_imag_margin, "tail": self.tail}


def subordination(mu: Distribution, alpha: LinearMap, b, tol: Optional[float] = None,
                  max_iter: Optional[int] = None, M: Optional[float] = None) -> SubordinationResult:
    """Fixed point omega = b + (alpha - 1)[h_mu(omega)], iterated from omega_0 = b."""
    tol = AnalyticConfig.FIXED_POINT_TOL if tol is None else tol
    max_iter = AnalyticConfig.MAX_ITER if max_iter is None else max_iter
    point = b if isinstance(b, UpperHalfPoint) else UpperHalfPoint.of(b)
    shift = alpha - identity_map(alpha.dim)
    if not shift.is_cp():
        logger.warning("alpha - 1 is not completely positive; the iteration may leave the half-plane")
    transform = transform_for(mu, M)
    base = imaginary_part(point.b)
    omega = point.b
    margin = np.inf
    delta = np.inf
    tail = 0.0
    for iteration in range(1, max_iter + 1):
        h, tail = _h_with_bound(transform, omega)
        updated = point.b + shift(h)
        delta = norm(updated - omega)
        omega = updated
        margin = min(margin, float(linalg.eigvalsh(imaginary_part(omega) - base)[0]))
        logger.debug("subordination step %d: change %.3e", iteration, delta)
        if delta <= tol:
            h, tail = _h_with_bound(transform, omega)
            residual = norm(omega - point.b - shift(h))
            return SubordinationResult(omega, iteration, residual, margin, tail)
    raise ConvergenceError("subordination fixed point not reached", delta, max_iter)


@dataclass
class ResidualReport:
    residual: float
    steps: Tuple[float, float]
    point: np.ndarray
    tail: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        payload = {"residual": self.residual, "steps": list(self.steps), "point": self.point, "tail": self.tail}
        payload.update(self.extra)
        return payload


def _variance_family(mu: Distribution, M: Optional[float]):
    """G(eta', b) for mu boxplus gamma_eta', closed form when mu is a scalar point mass or semicircle."""
    closed = closed_form(mu) if mu.dim == 1 else None
    if isinstance(closed, SemicircleCauchyTransform):
        base, center = closed.variance, closed.center
    elif isinstance(closed, PointMassCauchyTransform):
        base, center = 0.0, _scalar(closed.lam)
    else:
        base = None

    def evaluate(eta: LinearMap, b: np.ndarray) -> Tuple[np.ndarray, float]:
        if base is not None:
            return SemicircleCauchyTransform(base + _scalar(eta.coeffs).real, center)(b)
        gamma = make_distribution(Semicircular(eta), mu.trunc)
        return SeriesCauchyTransform(convolve(mu, gamma, CumulantKind.FREE), M)(b)

    return evaluate


def burgers_residual(mu: Distribution, eta: LinearMap, rho: LinearMap, b, step_t: Optional[float] = None,
                     step_b: Optional[float] = None, M: Optional[float] = None) -> ResidualReport:
    """||dG/deta(rho) + dG/db(rho(G))|| for G(eta, b) = G_(mu boxplus gamma_eta)(b), by central differences."""
    step_t = AnalyticConfig.STEP if step_t is None else step_t
    step_b = AnalyticConfig.STEP if step_b is None else step_b
    b = as_element(_element(b), mu.dim)
    family = _variance_family(mu, M)
    value, tail = family(eta, b)
    plus_t, tail_1 = family(eta + step_t * rho, b)
    minus_t, tail_2 = family(eta - step_t * rho, b)
    direction = rho(value)
    plus_b, tail_3 = family(eta, b + step_b * direction)
    minus_b, tail_4 = family(eta, b - step_b * direction)
    d_eta = (plus_t - minus_t) / (2 * step_t)
    d_b = (plus_b - minus_b) / (2 * step_b)
    residual = norm(d_eta + d_b)
    logger.debug("burgers residual %.3e at steps (%g, %g)", residual, step_t, step_b)
    return ResidualReport(residual, (step_t, step_b), b, max(tail, tail_1, tail_2, tail_3, tail_4))


def burgers_richardson(mu: Distribution, eta: LinearMap, rho: LinearMap, b, M: Optional[float] = None,
                       step: Optional[float] = None) -> ResidualReport:
    """Residuals at step and at the Richardson multiple; their ratio is about 4 when the error is O(step^2)."""
    step = AnalyticConfig.STEP if step is None else step
    coarse_step = step * AnalyticConfig.RICHARDSON_STEP / AnalyticConfig.STEP
    fine = burgers_residual(mu, eta, rho, b, step, step, M)
    coarse = burgers_residual(mu, eta, rho, b, coarse_step, coarse_step, M)
    ratio = coarse.residual / fine.residual if fine.residual > 0 else np.inf
    fine.extra = {"coarse_residual": coarse.residual, "ratio": ratio}
    return fine


def _h_family(mu: Distribution, M: Optional[float]):
    """h(eta', b) = h_(B_eta'(mu))(b) with its tail bound."""

    def evaluate(eta: LinearMap, b: np.ndarray) -> Tuple[np.ndarray, float]:
        return _h_with_bound(transform_for(bb_alpha(eta, mu), M), b)

    return evaluate


def _h_family_pde(family, eta: LinearMap, rho: LinearMap, b: np.ndarray, h: np.ndarray,
                  step_t: float, step_b: float) -> Tuple[float, float]:
    """||dh/deta(rho) - dh/db(rho(h))|| by central differences, and the largest tail used."""
    plus_t, tail_1 = family(eta + step_t * rho, b)
    minus_t, tail_2 = family(eta - step_t * rho, b)
    direction = rho(h)
    plus_b, tail_3 = family(eta, b + step_b * direction)
    minus_b, tail_4 = family(eta, b - step_b * direction)
    d_eta = (plus_t - minus_t) / (2 * step_t)
    d_b = (plus_b - minus_b) / (2 * step_b)
    return norm(d_eta - d_b), max(tail_1, tail_2, tail_3, tail_4)


def h_family_residual(mu: Distribution, eta: LinearMap, rho: Optional[LinearMap], b,
                      steps: Optional[Tuple[float, float]] = None, M: Optional[float] = None) -> ResidualReport:
    """||h_nu(b) - h_mu(b + eta(h_nu(b)))|| for nu = B_eta(mu).

    With a direction rho, the report also carries the residual of
    dh/deta(rho) = dh/db(rho(h)) at the given steps and at the Richardson
    multiple, as pde_residual and pde_coarse_residual.
    """
    b = as_element(_element(b), mu.dim)
    steps = (AnalyticConfig.STEP, AnalyticConfig.STEP) if steps is None else (float(steps[0]), float(steps[1]))
    family = _h_family(mu, M)
    h_nu, tail_nu = family(eta, b)
    h_mu, tail_mu = _h_with_bound(transform_for(mu, M), b + eta(h_nu))
    residual = norm(h_nu - h_mu)
    report = ResidualReport(residual, steps, b, tail_nu + tail_mu)
    if rho is None:
        return report
    scale = AnalyticConfig.RICHARDSON_STEP / AnalyticConfig.STEP
    fine, tail_fine = _h_family_pde(family, eta, rho, b, h_nu, *steps)
    coarse, tail_coarse = _h_family_pde(family, eta, rho, b, h_nu, steps[0] * scale, steps[1] * scale)
    logger.debug("h-family residuals %.3e (equation), %.3e (derivatives)", residual, fine)
    report.tail = max(report.tail, tail_fine, tail_coarse)
    report.extra = {"pde_residual": fine, "pde_coarse_residual": coarse,
                    "ratio": coarse / fine if fine > 0 else np.inf}
    return report


def b_transform_residual(mu: Distribution, b, M: Optional[float] = None) -> ResidualReport:
    """||B_mu(b) + h_mu(b^-1)|| with B_mu(b) = sum_n B^[n](b, ..., b)."""
    b = as_element(_element(b), mu.dim)
    inverse = _inverse(b, "b")
    h, tail = _h_with_bound(SeriesCauchyTransform(mu, M), inverse)
    residual = norm(eval_at(mu.b_series, b) + h)
    return ResidualReport(residual, (0.0, 0.0), b, tail)

