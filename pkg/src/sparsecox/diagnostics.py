"""Matrix-condition diagnostics and per-subject residual checks.

The compatibility factor kappa(T0; M) of a symmetric PSD matrix M and a
support set T0 is the infimum of

    sqrt(S) * sqrt(h' M h) / ||h_T0||_1

over nonzero h in the cone of vectors whose off-support l1 mass does not
exceed their on-support l1 mass.  Estimation error bounds for the l1
selector scale with 1/kappa^2, so a factor near zero is the diagnostic
signature of an ill-conditioned design.  The exact method enumerates sign
patterns of the support block and solves one convex subproblem per
pattern; the sampled method evaluates random cone directions plus a local
refinement and returns an upper bound on the exact value.

Martingale residuals compare each subject's observed event count with the
exposure accumulated under the fitted hazard.  Their total is zero by the
construction of the baseline jumps, so only the spread is informative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import SurvivalDataset, event_times
from .hazard import HazardEstimate
from .refit import RefitResult

__all__ = [
    "ConeProblem",
    "compatibility_factor",
    "matrix_sup_distance",
    "martingale_residuals",
]

#: Largest support size accepted by the exact method (2^S subproblems).
EXACT_SPARSITY_LIMIT = 12

_PSD_JITTER = 1e-8
_PGD_TOL = 1e-8
_PGD_MAX_ITER = 10_000
_POWER_TOL = 1e-8
_POWER_MAX_ITER = 10_000


@dataclass(frozen=True)
class ConeProblem:
    """A compatibility-factor instance: symmetric PSD matrix plus support.

    ``sparsity`` is derived from the support and exposed because the
    factor's definition scales with its square root.
    """

    matrix: np.ndarray
    support: tuple
    sparsity: int = field(init=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if m.size and np.max(np.abs(m - m.T)) > 1e-10:
            raise ValueError("matrix must be symmetric within 1e-10")
        m = (m + m.T) / 2.0
        m.setflags(write=False)
        sup = tuple(sorted(int(j) for j in self.support))
        if not sup:
            raise ValueError("support must be non-empty")
        if len(set(sup)) != len(sup):
            raise ValueError("support indices must be distinct")
        if sup[0] < 0 or sup[-1] >= m.shape[0]:
            raise ValueError(
                f"support indices out of range for a {m.shape[0]}-dim matrix"
            )
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "sparsity", len(sup))


def _check_psd(m: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(np.diag(m))))) if m.size else 1.0
    try:
        np.linalg.cholesky(m + _PSD_JITTER * scale * np.eye(m.shape[0]))
    except np.linalg.LinAlgError:
        eig = float(np.linalg.eigvalsh(m).min())
        raise ValueError(
            f"matrix is not positive semidefinite within tolerance "
            f"(minimum eigenvalue {eig:.3g})"
        )


def _largest_eigenvalue(m: np.ndarray) -> float:
    """Top eigenvalue of a symmetric PSD matrix by power iteration."""
    p = m.shape[0]
    # A slightly tilted start vector avoids starting orthogonal to the
    # leading eigenvector on structured matrices.
    v = np.ones(p) + 0.01 * np.arange(p)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_MAX_ITER):
        w = m @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        lam_new = float(v @ (m @ v))
        if abs(lam_new - lam) <= _POWER_TOL * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def _project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = total}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    rho = idx[u - css / idx > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_l1_ball(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    a = np.abs(v)
    if float(a.sum()) <= radius:
        return v.copy()
    return np.sign(v) * _project_simplex(a, radius)


def _orthant_minimum(
    m: np.ndarray,
    support: np.ndarray,
    comp: np.ndarray,
    sigma: np.ndarray,
    step: float,
    h0: np.ndarray = None,
) -> tuple:
    """Minimize h'Mh over one orthant slice of the normalized cone.

    The slice fixes the support signs to ``sigma`` with unit on-support l1
    mass, leaving the off-support block inside the unit l1 ball.  Projected
    gradient with a fixed step; both projection blocks are exact.
    """
    p = m.shape[0]
    if h0 is None:
        h = np.zeros(p)
        h[support] = sigma / support.size
    else:
        h = h0.copy()
    for _ in range(_PGD_MAX_ITER):
        g = 2.0 * (m @ h)
        h_new = h - step * g
        h_new[support] = sigma * _project_simplex(sigma * h_new[support])
        if comp.size:
            h_new[comp] = _project_l1_ball(h_new[comp])
        delta = float(np.max(np.abs(h_new - h)))
        h = h_new
        if delta <= _PGD_TOL:
            break
    return float(h @ (m @ h)), h


def compatibility_factor(
    prob: ConeProblem,
    method: str = "exact_orthant",
    n_samples: int = 256,
    rng: np.random.Generator = None,
) -> float:
    """Compatibility factor kappa of ``prob.matrix`` over the cone of
    ``prob.support``.

    ``exact_orthant`` enumerates the 2^S sign patterns of the support
    block (S capped at ``EXACT_SPARSITY_LIMIT``) and solves each convex
    subproblem to tolerance; by the h -> -h symmetry only half the
    patterns are visited.  ``sampled`` evaluates ``n_samples`` random cone
    directions and refines the best one locally; its value is an upper
    bound on the exact factor, suitable for large supports but never below
    the truth.
    """
    m = prob.matrix
    _check_psd(m)
    support = np.asarray(prob.support, dtype=int)
    comp = np.setdiff1d(np.arange(m.shape[0]), support)
    s = prob.sparsity

    lam = _largest_eigenvalue(m)
    if lam <= 0.0:
        return 0.0
    # The gradient of h'Mh is 2Mh, so its Lipschitz constant is 2*lam.
    step = 1.0 / (2.0 * lam)

    if method == "exact_orthant":
        if s > EXACT_SPARSITY_LIMIT:
            raise ValueError(
                f"exact_orthant enumerates 2^S subproblems and S={s} exceeds "
                f"{EXACT_SPARSITY_LIMIT}; use method='sampled'"
            )
        best = math.inf
        for bits in range(2 ** (s - 1)):
            sigma = np.ones(s)
            for k in range(s - 1):
                if (bits >> k) & 1:
                    sigma[k + 1] = -1.0
            val, _ = _orthant_minimum(m, support, comp, sigma, step)
            best = min(best, val)
        return math.sqrt(s * max(best, 0.0))

    if method == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        if n_samples < 1:
            raise ValueError("n_samples must be positive")
        best_val = math.inf
        best_h = None
        for _ in range(n_samples):
            h = np.zeros(m.shape[0])
            sigma = rng.choice((-1.0, 1.0), size=s)
            h[support] = sigma * rng.dirichlet(np.ones(s))
            if comp.size:
                w = rng.dirichlet(np.ones(comp.size)) * rng.uniform()
                h[comp] = rng.choice((-1.0, 1.0), size=comp.size) * w
            val = float(h @ (m @ h))
            if val < best_val:
                best_val = val
                best_h = h
        sigma = np.where(best_h[support] < 0.0, -1.0, 1.0)
        refined, _ = _orthant_minimum(m, support, comp, sigma, step, h0=best_h)
        return math.sqrt(s * max(min(best_val, refined), 0.0))

    raise ValueError(f"unknown method {method!r}")


def matrix_sup_distance(a, b) -> float:
    """Entrywise sup-norm distance max_ij |A_ij - B_ij|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def martingale_residuals(
    ds: SurvivalDataset,
    res: RefitResult,
    est: HazardEstimate,
) -> np.ndarray:
    """Per-subject residuals: observed events minus fitted exposure.

    Residual i is N_i(1) minus the accumulated hazard
    sum_{t_e <= X_i} exp(beta' Z_i(t_e)) * jump_e.  Subjects censored
    before the first jump contribute exactly zero; the residuals sum to
    zero up to rounding because each jump is the reciprocal of the
    at-risk-weighted total it is balanced against.
    """
    if res.beta2.shape[0] != ds.p:
        raise ValueError(
            f"refit has {res.beta2.shape[0]} coefficients but the dataset "
            f"has p={ds.p}"
        )
    if est.n != ds.n:
        raise ValueError(
            f"hazard estimate was built from n={est.n} subjects but the "
            f"dataset has n={ds.n}"
        )
    ev = event_times(ds)
    ev_values = np.array([t for t, _ in ev])
    if est.jump_times.shape[0] != ev_values.shape[0] or not np.array_equal(
        est.jump_times, ev_values
    ):
        raise ValueError("hazard estimate jump times do not match the dataset")

    residuals = np.where(ds.events, 1.0, 0.0)
    beta = res.beta2
    live = np.flatnonzero(beta)
    for (t_e, _), jump in zip(ev, est.jumps):
        at_risk = ds.times >= t_e
        if live.size:
            z = ds.covariates_at(t_e)
            eta = z[at_risk][:, live] @ beta[live]
            residuals[at_risk] -= np.exp(eta) * jump
        else:
            residuals[at_risk] -= jump
    return residuals
