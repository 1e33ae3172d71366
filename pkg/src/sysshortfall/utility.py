"""Parametric multivariate utility functions and their convex-duality toolkit.

Two families are shipped.  Both are finite, differentiable, strictly concave
and componentwise increasing on all of R^N, with supremum ``sum(c) + u0``:

``exp-sum``
    U(x) = sum_i c_i * (1 - exp(-alpha_i * x_i)) + u0

``exp-sum-coupled``
    U(x) = sum_i c_i * (1 - exp(-alpha_i * x_i)) + u0
           - gamma * exp(-beta * sum_i x_i)

The duality toolkit works with the convex function f = -U: ``conjugate``
evaluates f*(z) = sup_x(<x, z> + U(x)) and ``conjugate_grad`` evaluates
``grad f* = (grad f)^{-1}``.  The interior of dom f* is the open negative
orthant for both families (the uncoupled inversion is closed form; the
coupled one reduces to a one-dimensional monotone equation, solvable for
every strictly positive gradient target).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError, SolverError

FAMILIES = ("exp-sum", "exp-sum-coupled")

# Inversion of grad(-U): tolerances for the damped Newton iteration.
_INVERT_TOL = 1e-12
_INVERT_MAX_ITER = 200
_INVERT_MAX_HALVINGS = 50


@dataclass(frozen=True, eq=False)
class UtilityModel:
    """Immutable description of one multivariate utility function."""

    family: str
    c: np.ndarray
    alpha: np.ndarray
    u0: float = 0.0
    gamma: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown utility family {self.family!r}")
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if c.ndim != 1 or alpha.shape != c.shape or c.size == 0:
            raise ValueError("c and alpha must be 1-D arrays of equal positive length")
        if not (np.all(c > 0) and np.all(alpha > 0)):
            raise ValueError("weights c and decay rates alpha must be strictly positive")
        gamma = float(self.gamma)
        beta = float(self.beta)
        if self.family == "exp-sum":
            gamma, beta = 0.0, 1.0  # coupling parameters are inert for this family
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if beta <= 0:
            raise ValueError("beta must be strictly positive")
        for name, arr in (("c", c), ("alpha", alpha)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        c.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "u0", float(self.u0))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def sup_value(self) -> float:
        """Least upper bound of U, approached as all coordinates grow."""
        return float(np.sum(self.c) + self.u0)

    @property
    def coupled(self) -> bool:
        return self.family == "exp-sum-coupled" and self.gamma > 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "c": self.c.tolist(),
            "alpha": self.alpha.tolist(),
            "u0": self.u0,
            "gamma": self.gamma,
            "beta": self.beta,
        }


def utility_from_dict(d: dict[str, Any]) -> UtilityModel:
    """Build a UtilityModel from its JSON configuration object."""
    return UtilityModel(
        family=d["family"],
        c=np.asarray(d["c"], dtype=float),
        alpha=np.asarray(d["alpha"], dtype=float),
        u0=float(d.get("u0", 0.0)),
        gamma=float(d.get("gamma", 0.0)),
        beta=float(d.get("beta", 1.0)),
    )


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of sampling-based and analytic checks of the standing assumptions."""

    sup_positive: bool
    sup_value: float
    sample_count: int
    concavity_samples_passed: int
    monotone_samples_passed: int
    well_controlled_certified: bool
    well_controlled_note: str

    @property
    def all_passed(self) -> bool:
        return (
            self.sup_positive
            and self.concavity_samples_passed == self.sample_count
            and self.monotone_samples_passed == self.sample_count
            and self.well_controlled_certified
        )


def _points(model: UtilityModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.n,):
        raise ValueError(f"expected trailing dimension {model.n}, got shape {x.shape}")
    return x


def eval_utility(model: UtilityModel, x) -> float | np.ndarray:
    """Evaluate U at one point ``(N,)`` or a batch ``(..., N)``."""
    x = _points(model, x)
    with np.errstate(over="ignore"):
        val = np.sum(model.c * -np.expm1(-model.alpha * x), axis=-1) + model.u0
        if model.coupled:
            val = val - model.gamma * np.exp(-model.beta * np.sum(x, axis=-1))
    return float(val) if x.ndim == 1 else val


def grad_utility(model: UtilityModel, x) -> np.ndarray:
    """Analytic gradient of U; strictly positive componentwise."""
    x = _points(model, x)
    with np.errstate(over="ignore"):
        g = model.c * model.alpha * np.exp(-model.alpha * x)
        if model.coupled:
            g = g + model.gamma * model.beta * np.exp(
                -model.beta * np.sum(x, axis=-1, keepdims=True)
            )
    return g


def hessian_utility(model: UtilityModel, x) -> np.ndarray:
    """Hessian of U: diagonal, plus a rank-one coupling term when present."""
    x = _points(model, x)
    with np.errstate(over="ignore"):
        diag = -model.c * model.alpha**2 * np.exp(-model.alpha * x)
        h = np.zeros(x.shape + (model.n,))
        idx = np.arange(model.n)
        h[..., idx, idx] = diag
        if model.coupled:
            w = model.gamma * model.beta**2 * np.exp(-model.beta * np.sum(x, axis=-1))
            h = h - w[..., None, None] * np.ones((model.n, model.n))
    return h


def _check_conjugate_domain(model: UtilityModel, z: np.ndarray) -> None:
    if not np.all(np.isfinite(z)):
        raise DomainError("conjugate argument must be finite")
    if not np.all(z < 0):
        raise DomainError(
            "conjugate argument must be strictly negative componentwise "
            "(interior of the conjugate domain)"
        )


def _expsum_inverse(model: UtilityModel, g: np.ndarray) -> np.ndarray:
    # Solves c_i * alpha_i * exp(-alpha_i x_i) = g_i componentwise.
    return -np.log(g / (model.c * model.alpha)) / model.alpha


def invert_gradient(model: UtilityModel, g, x0=None) -> np.ndarray:
    """Solve grad U(x) = g for x, batched over leading axes of ``g``.

    ``g`` must be strictly positive componentwise.  Closed form for the
    uncoupled family; damped Newton (backtracking on the residual norm,
    which is globally convergent here because the Hessian is everywhere
    nonsingular) for the coupled one.
    """
    g = _points(model, g)
    if not np.all(g > 0):
        raise DomainError("gradient targets must be strictly positive componentwise")
    if not model.coupled:
        return _expsum_inverse(model, g)

    squeeze = g.ndim == 1
    gb = g.reshape(-1, model.n)
    if x0 is None:
        # Uncoupled inversion over-shoots the coupled gradient, but it is a
        # domain-interior start and Newton damps globally from it.
        xb = _expsum_inverse(model, gb)
    else:
        xb = np.array(_points(model, x0), dtype=float, copy=True).reshape(-1, model.n)
        if xb.shape != gb.shape:
            raise ValueError("x0 must match the shape of g")

    def resid(pts):
        r = grad_utility(model, pts) - gb
        return r, np.max(np.abs(r), axis=-1)

    r, nrm = resid(xb)
    for _ in range(_INVERT_MAX_ITER):
        active = nrm > _INVERT_TOL
        if not active.any():
            break
        step = np.zeros_like(xb)
        step[active] = -np.linalg.solve(hessian_utility(model, xb[active]), r[active])
        t = np.ones(xb.shape[0])
        for _ in range(_INVERT_MAX_HALVINGS + 1):
            xt = xb + (t * active)[:, None] * step
            rt, nt = resid(xt)
            bad = active & ~(np.isfinite(nt) & (nt <= (1.0 - 1e-4 * t) * nrm))
            if not bad.any():
                break
            t[bad] *= 0.5
        else:
            raise SolverError(
                "gradient inversion stalled during backtracking",
                residual=float(np.max(nrm)),
            )
        xb, r, nrm = xt, rt, nt
    else:
        raise SolverError(
            "gradient inversion did not converge",
            residual=float(np.max(nrm)),
            iterations=_INVERT_MAX_ITER,
        )
    return xb[0] if squeeze else xb.reshape(g.shape)


def conjugate(model: UtilityModel, z) -> float | np.ndarray:
    """Convex conjugate f*(z) of f = -U, for z in the open negative orthant.

    Closed form for ``exp-sum``; for the coupled family the inner
    maximization is solved by inverting the gradient numerically.
    """
    z = _points(model, z)
    _check_conjugate_domain(model, z)
    if not model.coupled:
        x = _expsum_inverse(model, -z)
        val = np.sum(x * z + model.c + z / model.alpha, axis=-1) + model.u0
    else:
        x = invert_gradient(model, -z)
        val = np.sum(x * z, axis=-1) + eval_utility(model, x)
    return float(val) if z.ndim == 1 else val


def conjugate_grad(model: UtilityModel, z, x0=None) -> np.ndarray:
    """Gradient of the conjugate, i.e. the inverse of grad f = -grad U."""
    z = _points(model, z)
    _check_conjugate_domain(model, z)
    return invert_gradient(model, -z, x0=x0)


def validate_assumptions(
    model: UtilityModel, sample_count: int = 200, seed: int = 0
) -> AssumptionReport:
    """Check the standing assumptions on U and report the outcome.

    Positivity of sup U is decided from the closed form.  Strict concavity
    and strict monotonicity are sampled on ``[-5, 5]^N`` (Cholesky of the
    negated Hessian, positivity of the gradient).  Well-controlledness is an
    asymptotic growth condition that finite sampling cannot falsify, so it is
    certified analytically per family and the justification is recorded.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-5.0, 5.0, size=(sample_count, model.n))
    concave = 0
    monotone = 0
    for k in range(sample_count):
        h = hessian_utility(model, pts[k])
        try:
            np.linalg.cholesky(-h)
            concave += 1
        except np.linalg.LinAlgError:
            pass
        if np.all(grad_utility(model, pts[k]) > 0):
            monotone += 1
    if model.coupled:
        note = (
            "each coordinate's downside is penalized exponentially through "
            "c_i*exp(alpha_i*loss); the coupling term -gamma*exp(-beta*sum(x)) "
            "is nonpositive and only deepens the lower tail, so the exponential "
            "decay dominates any linear growth allowance while the upside stays "
            "bounded above by sum(c)+u0"
        )
    else:
        note = (
            "the lower tail decays like -c_i*exp(alpha_i*loss) per coordinate, "
            "which dominates any linear growth allowance, and the upside is "
            "bounded above by sum(c)+u0"
        )
    return AssumptionReport(
        sup_positive=model.sup_value > 0,
        sup_value=model.sup_value,
        sample_count=sample_count,
        concavity_samples_passed=concave,
        monotone_samples_passed=monotone,
        well_controlled_certified=True,
        well_controlled_note=note,
    )
