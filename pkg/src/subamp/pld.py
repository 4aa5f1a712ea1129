"""Privacy loss random variables of subsampled Gaussian mechanisms.

One application of scheme-then-Gaussian induces a log-likelihood-ratio
random variable s = L(t) of the output t. For Poisson the reference density
is the plain Gaussian and L has a closed-form inverse; for WOR the loss is
the two-sided single-shift mixture ratio, also invertible in closed form.
The multiset schemes (WR, MUSTwo, MUSTow, MUSTww) give binomial-mixture
exponential sums whose inverse is found by safeguarded Newton and whose
inverse-derivative is approximated by central difference quotients.

Discretization follows the accountant's grid contract: masses c_i at the
left endpoints plus conservative per-interval lower/upper masses obtained
from endpoint and midpoint evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .amplification import log_miss_probability, multiplicity_weights
from .schemes import MULTISET_SCHEMES, Poisson, SamplingScheme, WOR

__all__ = [
    "PrivacyLossModel",
    "DiscretizedPLD",
    "OutOfDomainError",
    "NoConvergenceError",
    "loss_at",
    "invert_loss",
    "pld_density",
    "pld_density_swapped",
    "log_output_density",
    "discretize",
]

# Mixture weights whose log falls this far below the largest are dropped;
# the induced relative error in any density or loss value is < 1e-20.
_LOG_WEIGHT_CUTOFF = 60.0

_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 200
_CHUNK = 1 << 16


class OutOfDomainError(ValueError):
    """Requested loss value lies outside the image of L."""


class NoConvergenceError(RuntimeError):
    """Root finder exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int, worst_residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.worst_residual = worst_residual


@dataclass(frozen=True)
class PrivacyLossModel:
    """Subsampling scheme composed with a Gaussian of scale sigma.

    sigma is expressed in units of the per-copy sensitivity, matching the
    unit shifts of the mixture components.
    """

    scheme: SamplingScheme
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")

    @property
    def is_symmetric(self) -> bool:
        """True when f_X'(t) = f_X(-t) (every scheme except Poisson)."""
        return not isinstance(self.scheme, Poisson)

    @property
    def loss_domain_low(self) -> float:
        """Infimum of the image of L (open end)."""
        if isinstance(self.scheme, Poisson):
            return math.log1p(-self.scheme.gamma)
        return -math.inf

    @cached_property
    def _mixture(self) -> tuple[np.ndarray, np.ndarray]:
        """(multiplicities l, log mixture weights) with l = 0 included."""
        scheme = self.scheme
        if isinstance(scheme, Poisson):
            raise TypeError("Poisson loss is one-sided; no symmetric mixture")
        log_w0 = log_miss_probability(scheme)
        if isinstance(scheme, WOR):
            l_vals = np.array([0.0, 1.0])
            log_w = np.array([log_w0, math.log(scheme.m / scheme.n)])
            return l_vals, log_w
        weights = multiplicity_weights(scheme)
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        l_vals = np.arange(1, scheme.m + 1, dtype=float)
        keep = log_w >= max(log_w.max(), log_w0) - _LOG_WEIGHT_CUTOFF
        l_vals = np.concatenate(([0.0], l_vals[keep]))
        log_w = np.concatenate(([log_w0], log_w[keep]))
        return l_vals, log_w

    @cached_property
    def _log_a(self) -> np.ndarray:
        """log(w_l * exp(-l^2 / (2 sigma^2))) over the kept multiplicities."""
        l_vals, log_w = self._mixture
        return log_w - l_vals**2 / (2.0 * self.sigma**2)

    @cached_property
    def _mean_multiplicity_given_present(self) -> float:
        l_vals, log_w = self._mixture
        w = np.exp(log_w[1:])
        return float((l_vals[1:] * w).sum() / w.sum())


def _lse(terms: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2-d array."""
    peak = terms.max(axis=1)
    with np.errstate(over="ignore"):
        out = peak + np.log(np.exp(terms - peak[:, None]).sum(axis=1))
    return out


def _sym_loss(model: PrivacyLossModel, t: np.ndarray) -> np.ndarray:
    l_vals, _ = model._mixture
    slopes = l_vals / model.sigma**2
    arg = t[:, None] * slopes[None, :]
    log_a = model._log_a[None, :]
    return _lse(log_a + arg) - _lse(log_a - arg)


def _sym_loss_and_slope(
    model: PrivacyLossModel, t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    l_vals, _ = model._mixture
    sig2 = model.sigma**2
    slopes = l_vals / sig2
    arg = t[:, None] * slopes[None, :]
    log_a = model._log_a[None, :]
    log_num = _lse(log_a + arg)
    log_den = _lse(log_a - arg)
    # l_vals[0] is always the l = 0 component; it contributes no slope.
    log_slope_w = np.concatenate(([-np.inf], np.log(slopes[1:])))
    log_num_d = _lse(log_a + arg + log_slope_w[None, :])
    log_den_d = _lse(log_a - arg + log_slope_w[None, :])
    loss = log_num - log_den
    slope = np.exp(log_num_d - log_num) + np.exp(log_den_d - log_den)
    return loss, slope


def loss_at(model: PrivacyLossModel, t):
    """The privacy loss L(t) of outputting t. Accepts scalars or arrays."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if not np.all(np.isfinite(t_arr)):
        raise ValueError("t must be finite")
    if isinstance(model.scheme, Poisson):
        q = model.scheme.gamma
        arg = (2.0 * t_arr - 1.0) / (2.0 * model.sigma**2)
        out = np.logaddexp(math.log(q) + arg, math.log1p(-q))
    else:
        out = _sym_loss(model, t_arr)
    return float(out[0]) if np.ndim(t) == 0 else out


def log_output_density(model: PrivacyLossModel, t):
    """log f_X(t): the subsampled-mechanism output density under X."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    sig = model.sigma
    log_norm = -math.log(sig) - 0.5 * math.log(2.0 * math.pi)
    if isinstance(model.scheme, Poisson):
        q = model.scheme.gamma
        out = np.logaddexp(
            math.log(q) - (t_arr - 1.0) ** 2 / (2.0 * sig**2),
            math.log1p(-q) - t_arr**2 / (2.0 * sig**2),
        )
    else:
        l_vals, log_w = model._mixture
        terms = log_w[None, :] - (t_arr[:, None] - l_vals[None, :]) ** 2 / (2.0 * sig**2)
        out = _lse(terms)
    out = out + log_norm
    return float(out[0]) if np.ndim(t) == 0 else out


# -- closed-form inverses (Poisson and WOR) ---------------------------------


def _poisson_inverse(model: PrivacyLossModel, s: np.ndarray) -> np.ndarray:
    q = model.scheme.gamma
    # e^s - (1 - q) written as expm1(s) + q to survive s near log(1 - q).
    return model.sigma**2 * (np.log(np.expm1(s) + q) - math.log(q)) + 0.5


def _poisson_inverse_derivative(model: PrivacyLossModel, s: np.ndarray) -> np.ndarray:
    return model.sigma**2 * np.exp(s) / (np.expm1(s) + q_of(model))


def q_of(model: PrivacyLossModel) -> float:
    scheme = model.scheme
    if isinstance(scheme, Poisson):
        return scheme.gamma
    if isinstance(scheme, WOR):
        return scheme.m / scheme.n
    raise TypeError(f"no single inclusion ratio for {scheme!r}")


def _wor_pieces(model: PrivacyLossModel, s: np.ndarray):
    """Shared stable pieces of the WOR closed-form inverse.

    With P = (1-q)(1-e^s), Q = 4 (q e^{-1/(2 sigma^2)})^2 e^s, D = P^2 + Q:
    e^{t / sigma^2} = (-P + sqrt(D)) / (2 q e^{-1/(2 sigma^2)}). Both
    (-P + sqrt(D)) and (P + sqrt(D)) are assembled via the conjugate trick on
    whichever side would cancel.
    """
    q = q_of(model)
    a = q * math.exp(-1.0 / (2.0 * model.sigma**2))
    p = (1.0 - q) * (-np.expm1(s))
    qq = 4.0 * a * a * np.exp(s)
    root = np.sqrt(p * p + qq)
    psum = np.where(p > 0, p + root, qq / (root - np.minimum(p, 0.0)))
    pdiff = np.where(p <= 0, root - p, qq / psum)  # -P + sqrt(D)
    return a, p, qq, root, psum, pdiff


def _wor_inverse(model: PrivacyLossModel, s: np.ndarray) -> np.ndarray:
    a, _, _, _, _, pdiff = _wor_pieces(model, s)
    return model.sigma**2 * (np.log(pdiff) - math.log(2.0 * a))


def _wor_inverse_derivative(model: PrivacyLossModel, s: np.ndarray) -> np.ndarray:
    # Algebraically equal to the quotient-form derivative of the inverse;
    # this arrangement keeps every term positive at both tails.
    q = q_of(model)
    _, _, _, root, psum, _ = _wor_pieces(model, s)
    return model.sigma**2 * (psum / 2.0 + (1.0 - q) * np.exp(s)) / root


# -- safeguarded Newton for the multiset schemes ----------------------------


def _expand_brackets(
    model: PrivacyLossModel, s: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> None:
    for side, bound in (("low", lo), ("high", hi)):
        active = np.arange(s.size)
        for _ in range(200):
            resid = _sym_loss(model, bound[active]) - s[active]
            bad = resid > 0.0 if side == "low" else resid < 0.0
            if not bad.any():
                break
            active = active[bad]
            bound[active] *= 2.0
        else:
            raise NoConvergenceError(
                f"bracket expansion failed ({side} side)", 200, math.inf
            )


def _invert_newton_chunk(
    model: PrivacyLossModel,
    s: np.ndarray,
    tol: float,
    max_iter: int,
    start: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    sig2 = model.sigma**2
    if start is not None:
        t, lo, hi = (np.array(a, dtype=float) for a in start)
    else:
        m_eff = model._mean_multiplicity_given_present
        t = sig2 * s / m_eff + 0.5
        lo = np.full_like(s, -10.0 * sig2)
        hi = np.full_like(s, 10.0 * sig2)
        _expand_brackets(model, s, lo, hi)
        t = np.clip(t, lo, hi)
    active = np.arange(s.size)
    for _ in range(max_iter):
        loss, slope = _sym_loss_and_slope(model, t[active])
        resid = loss - s[active]
        below = resid < 0.0
        lo[active[below]] = t[active[below]]
        above = resid > 0.0
        hi[active[above]] = t[active[above]]

        live = np.abs(resid) > tol
        active = active[live]
        if active.size == 0:
            return t
        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = t[active] - resid[live] / slope[live]
        fallback = ~np.isfinite(t_new) | (t_new <= lo[active]) | (t_new >= hi[active])
        t_new = np.where(fallback, 0.5 * (lo[active] + hi[active]), t_new)
        t[active] = t_new
    worst = float(np.abs(_sym_loss(model, t[active]) - s[active]).max())
    raise NoConvergenceError(
        f"Newton inversion did not reach |L(t)-s| <= {tol:g} after "
        f"{max_iter} iterations ({active.size} points open, worst residual {worst:.3e})",
        iterations=max_iter,
        worst_residual=worst,
    )


_PRESOLVE_MIN = 4096
_PRESOLVE_GRID = 4096


def _presolve_starts(model: PrivacyLossModel, s: np.ndarray):
    """Tight starting points/brackets by interpolating L on a coarse t-grid.

    L is strictly increasing, so the two coarse nodes around each target s
    bracket the root and linear interpolation lands within a few Newton
    steps of it.
    """
    edges = np.array([s.min(), s.max()])
    sig2 = model.sigma**2
    lo = np.full(2, -10.0 * sig2)
    hi = np.full(2, 10.0 * sig2)
    _expand_brackets(model, edges, lo, hi)
    t_coarse = np.linspace(lo.min(), hi.max(), _PRESOLVE_GRID + 1)
    s_coarse = _sym_loss(model, t_coarse)
    t0 = np.interp(s, s_coarse, t_coarse)
    idx = np.clip(np.searchsorted(s_coarse, s, side="right"), 1, _PRESOLVE_GRID)
    # One spare cell on each side absorbs ulp-level wiggles in s_coarse.
    return t0, t_coarse[np.maximum(idx - 2, 0)], t_coarse[np.minimum(idx + 1, _PRESOLVE_GRID)]


def _invert_newton(
    model: PrivacyLossModel, s: np.ndarray, tol: float, max_iter: int
) -> np.ndarray:
    starts = None
    if s.size >= _PRESOLVE_MIN:
        t0, lo, hi = _presolve_starts(model, s)
        starts = (t0, lo, hi)
    out = np.empty_like(s)
    for begin in range(0, s.size, _CHUNK):
        sl = slice(begin, min(begin + _CHUNK, s.size))
        chunk_start = None
        if starts is not None:
            chunk_start = (starts[0][sl], starts[1][sl], starts[2][sl])
        out[sl] = _invert_newton_chunk(model, s[sl], tol, max_iter, chunk_start)
    return out


def invert_loss(
    model: PrivacyLossModel,
    s,
    tol: float = _NEWTON_TOL,
    max_iter: int = _NEWTON_MAX_ITER,
    force_newton: bool = False,
):
    """t with L(t) = s.

    Poisson and WOR use the closed-form inverses; the multiset schemes use
    bracketed Newton to |L(t) - s| <= tol. force_newton runs the root finder
    for WOR too (cross-check path).
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if not np.all(np.isfinite(s_arr)):
        raise ValueError("s must be finite")
    scheme = model.scheme
    if isinstance(scheme, Poisson):
        low = model.loss_domain_low
        if np.any(s_arr <= low):
            raise OutOfDomainError(
                f"loss values must exceed log(1-q) = {low:.6g} for Poisson"
            )
        out = _poisson_inverse(model, s_arr)
    elif isinstance(scheme, WOR) and not force_newton:
        out = _wor_inverse(model, s_arr)
    else:
        out = _invert_newton(model, s_arr, tol, max_iter)
    return float(out[0]) if np.ndim(s) == 0 else out


def _density_from_t(
    model: PrivacyLossModel, t: np.ndarray, dinv: np.ndarray
) -> np.ndarray:
    return np.exp(log_output_density(model, t)) * dinv


def _quotient_step(s: np.ndarray, h: float | None) -> np.ndarray:
    if h is not None:
        return np.full_like(s, float(h))
    return np.maximum(1e-6, 1e-6 * np.abs(s))


def pld_density(model: PrivacyLossModel, s, h: float | None = None):
    """Density omega(s) of the privacy loss random variable.

    omega(s) = f_X(L^{-1}(s)) * d L^{-1}/ds. The derivative is closed-form
    for Poisson and WOR; for the multiset schemes it is a central difference
    quotient of step h (default max(1e-6, 1e-6 |s|); the accountant passes
    its own grid length).
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    scheme = model.scheme
    if isinstance(scheme, Poisson):
        low = model.loss_domain_low
        out = np.zeros_like(s_arr)
        ok = s_arr > low
        if ok.any():
            t = _poisson_inverse(model, s_arr[ok])
            dinv = _poisson_inverse_derivative(model, s_arr[ok])
            out[ok] = _density_from_t(model, t, dinv)
    elif isinstance(scheme, WOR):
        t = _wor_inverse(model, s_arr)
        dinv = _wor_inverse_derivative(model, s_arr)
        out = _density_from_t(model, t, dinv)
    else:
        step = _quotient_step(s_arr, h)
        t = _invert_newton(model, s_arr, _NEWTON_TOL, _NEWTON_MAX_ITER)
        t_hi = _invert_newton(model, s_arr + step, _NEWTON_TOL, _NEWTON_MAX_ITER)
        t_lo = _invert_newton(model, s_arr - step, _NEWTON_TOL, _NEWTON_MAX_ITER)
        dinv = (t_hi - t_lo) / (2.0 * step)
        out = _density_from_t(model, t, dinv)
    return float(out[0]) if np.ndim(s) == 0 else out


def pld_density_swapped(model: PrivacyLossModel, s, h: float | None = None):
    """Density of the loss with X and X' exchanged (omega_{X'/X}).

    For the symmetric schemes L_{X'/X}(t) = -L_{X/X'}(t), so the swapped
    density at s is f_X'(g(-s)) * g'(-s) with g the forward inverse. Used by
    the Lemma-style identity checks; undefined for Poisson.
    """
    if not model.is_symmetric:
        raise TypeError("swapped density implemented for symmetric schemes only")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    neg = -s_arr
    if isinstance(model.scheme, WOR):
        t = _wor_inverse(model, neg)
        dinv = _wor_inverse_derivative(model, neg)
    else:
        step = _quotient_step(neg, h)
        t = _invert_newton(model, neg, _NEWTON_TOL, _NEWTON_MAX_ITER)
        t_hi = _invert_newton(model, neg + step, _NEWTON_TOL, _NEWTON_MAX_ITER)
        t_lo = _invert_newton(model, neg - step, _NEWTON_TOL, _NEWTON_MAX_ITER)
        dinv = (t_hi - t_lo) / (2.0 * step)
    # f_X'(t) = f_X(-t) by symmetry.
    out = np.exp(log_output_density(model, -t)) * dinv
    return float(out[0]) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class DiscretizedPLD:
    """Grid masses of a PLD over [-L, L) with conservative interval bounds.

    bound_method records that interval extrema were approximated from
    endpoint plus midpoint evaluations rather than true extremization.
    """

    trunc_L: float
    grid_r: int
    dx: float
    c: np.ndarray
    c_minus: np.ndarray
    c_plus: np.ndarray
    scheme: SamplingScheme
    sigma: float
    bound_method: str = "endpoint+midpoint"

    def __post_init__(self):
        if self.grid_r < 2 or self.grid_r % 2 != 0:
            raise ValueError(f"grid_r must be a positive even integer, got {self.grid_r}")
        if not math.isclose(self.dx, 2.0 * self.trunc_L / self.grid_r, rel_tol=1e-12):
            raise ValueError("dx must equal 2*trunc_L/grid_r")
        for name in ("c", "c_minus", "c_plus"):
            arr = getattr(self, name)
            if arr.shape != (self.grid_r,):
                raise ValueError(f"{name} must have length grid_r")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite mass in {name}")
            if np.any(arr < 0.0):
                raise ValueError(f"negative mass in {name}")
        if np.any(self.c_minus > self.c) or np.any(self.c > self.c_plus):
            raise ValueError("interval bounds must bracket the point masses")

    @property
    def s(self) -> np.ndarray:
        """Grid points s_i = -L + i*dx, i = 0..r-1."""
        return -self.trunc_L + self.dx * np.arange(self.grid_r)

    @property
    def total_mass(self) -> float:
        return float(self.c.sum())

    def to_csv(self, path) -> None:
        """Flat debug dump: one row (s, c, c_minus, c_plus) per grid cell."""
        data = np.column_stack([self.s, self.c, self.c_minus, self.c_plus])
        np.savetxt(
            path,
            data,
            delimiter=",",
            header="s,c,c_minus,c_plus",
            comments="",
            fmt="%.12g",
        )


def discretize(model: PrivacyLossModel, trunc_L: float, grid_r: int) -> DiscretizedPLD:
    """Discretize omega onto the accountant grid.

    c_i is the left-endpoint mass dx*omega(s_i); the interval bounds take
    the min/max of omega over {s_i, s_i + dx/2, s_{i+1}}. For the multiset
    schemes the half-step grid is inverted once and the difference quotient
    (step dx) reuses neighbors two half-steps away.
    """
    if not (math.isfinite(trunc_L) and trunc_L > 0.0):
        raise ValueError(f"trunc_L must be positive and finite, got {trunc_L!r}")
    if grid_r < 2 or grid_r % 2 != 0:
        raise ValueError(f"grid_r must be a positive even integer, got {grid_r!r}")

    dx = 2.0 * trunc_L / grid_r
    half = dx / 2.0
    # Half-step grid from -L - dx to L + dx inclusive: indices -2 .. 2r+2.
    n_half = 2 * grid_r + 5
    s_half = -trunc_L + half * (np.arange(n_half) - 2.0)

    scheme = model.scheme
    if isinstance(scheme, Poisson):
        omega_half = np.zeros(n_half)
        ok = s_half > model.loss_domain_low
        if ok.any():
            t = _poisson_inverse(model, s_half[ok])
            dinv = _poisson_inverse_derivative(model, s_half[ok])
            omega_half[ok] = _density_from_t(model, t, dinv)
    elif isinstance(scheme, WOR):
        t = _wor_inverse(model, s_half)
        dinv = _wor_inverse_derivative(model, s_half)
        omega_half = _density_from_t(model, t, dinv)
    else:
        t = _invert_newton(model, s_half, _NEWTON_TOL, _NEWTON_MAX_ITER)
        dinv = (t[4:] - t[:-4]) / (2.0 * dx)
        omega_half = np.zeros(n_half)
        omega_half[2:-2] = _density_from_t(model, t[2:-2], dinv)
        # The two guard points at each end only feed the quotient above.

    # omega on the working half-grid 0..2r (s = -L + i*dx/2).
    omega_work = omega_half[2 : 2 * grid_r + 3]
    left = omega_work[0 : 2 * grid_r : 2]
    mid = omega_work[1 : 2 * grid_r : 2]
    right = omega_work[2 : 2 * grid_r + 1 : 2]

    c = dx * left
    c_minus = dx * np.minimum(np.minimum(left, mid), right)
    c_plus = dx * np.maximum(np.maximum(left, mid), right)
    return DiscretizedPLD(
        trunc_L=float(trunc_L),
        grid_r=int(grid_r),
        dx=dx,
        c=c,
        c_minus=c_minus,
        c_plus=c_plus,
        scheme=scheme,
        sigma=model.sigma,
    )
