"""Empirical covariance operators and estimators of the autocorrelation operator.

Two estimators are provided. ``componentwise_estimator`` projects
``D_n C_n^{-1}`` onto the leading empirical eigendirections of ``C_n``.
``diagonal_svd_estimator`` keeps the leading singular triples of the same
composition. Both invert ``C_n`` only on its leading ``k`` eigenspace.

The module also evaluates the deterministic perturbation inequalities that
drive the consistency results: eigenvector alignment against the gaps of
``C_X``, singular-vector alignment against the gaps of ``|rho_j|^2`` and the
Weyl-type bound on singular values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from arh1 import hilbert as hc
from arh1.model import StationaryLaw, Trajectory

RIDGE_REL = 1e-10
GAP_FLOOR = 1e-12
BOUND_SLACK = 1e-12
SQRT8 = 2.0 * math.sqrt(2.0)


class AssumptionError(ValueError):
    """A hypothesis of the estimation theory fails on the data at hand."""


class DegenerateSpectrumError(AssumptionError):
    """Consecutive eigenvalues (or squared singular values) are not separated."""


# ---------------------------------------------------------------------------
# empirical operators


def _samples(traj) -> np.ndarray:
    x = traj.samples if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected an (n, d) array of samples")
    if x.shape[0] < 2:
        raise AssumptionError(f"empirical operators need n >= 2 samples, got n = {x.shape[0]}")
    return x


def empirical_covariance(traj) -> np.ndarray:
    """``C_n = (1/n) sum_i X_i (x) X_i``."""
    x = _samples(traj)
    c = x.T @ x / x.shape[0]
    return 0.5 * (c + c.T)


def empirical_cross_covariance(traj) -> np.ndarray:
    """``D_n = (1/(n-1)) sum_i X_i (x) X_{i+1}``, i.e. ``h -> mean <X_i, h> X_{i+1}``."""
    x = _samples(traj)
    return x[1:].T @ x[:-1] / (x.shape[0] - 1)


@dataclass(frozen=True)
class EmpiricalOperators:
    c_n: np.ndarray
    d_n: np.ndarray
    n: int
    eigen_c: hc.EigenSystem

    @property
    def d(self) -> int:
        return self.c_n.shape[0]


def empirical_operators(traj) -> EmpiricalOperators:
    x = _samples(traj)
    c = empirical_covariance(x)
    return EmpiricalOperators(c_n=c, d_n=empirical_cross_covariance(x), n=x.shape[0],
                              eigen_c=hc.eigen_sym(c))


def from_operators(c_n, d_n, n: int) -> EmpiricalOperators:
    """Wrap given operators, e.g. hand-built or population ones."""
    c = hc.as_operator(c_n)
    return EmpiricalOperators(c_n=c, d_n=hc.as_operator(d_n, c.shape[0]), n=n,
                              eigen_c=hc.eigen_sym(c))


# ---------------------------------------------------------------------------
# alignment and spectral gaps


def sgn(a: float) -> float:
    return 1.0 if a >= 0 else -1.0


def sign_align(empirical, reference) -> np.ndarray:
    """``reference`` flipped so that it correlates non-negatively with ``empirical``."""
    e = hc.as_vector(empirical)
    r = hc.as_vector(reference, e.shape[0])
    if not np.any(e) or not np.any(r):
        raise ValueError("cannot align a zero vector")
    return sgn(float(r @ e)) * r


def _gap_sup(values, k: int, what: str) -> float:
    v = np.asarray(values, dtype=float)
    if not 1 <= k < v.size:
        raise ValueError(f"need 1 <= k < {v.size}, got k = {k}")
    gaps = v[:k] - v[1:k + 1]
    if np.any(gaps < -GAP_FLOOR):
        raise ValueError(f"{what} must be sorted non-increasing")
    j = int(np.argmin(gaps))
    if gaps[j] <= GAP_FLOOR:
        raise DegenerateSpectrumError(
            f"degenerate spectrum: {what} {j + 1} and {j + 2} differ by {gaps[j]:.3e}")
    return float(np.max(1.0 / gaps))


def spectral_gap_lambda(eigenvalues, k: int) -> float:
    """``max_{j <= k} 1 / (C_j - C_{j+1})``."""
    return _gap_sup(eigenvalues, k, "eigenvalues")


def spectral_gap_lambda_rho(singular_values, k: int) -> float:
    """``max_{j <= k} 1 / (|s_j|^2 - |s_{j+1}|^2)``."""
    s = np.abs(np.asarray(singular_values, dtype=float))
    return _gap_sup(s**2, k, "squared singular values")


def with_zero_tail(values, k: int) -> np.ndarray:
    """Append the zero eigenvalue of the complement when ``k`` reaches ``len(values)``."""
    v = np.asarray(values, dtype=float)
    return np.append(v, 0.0) if k >= v.size else v


# ---------------------------------------------------------------------------
# truncation


@dataclass(frozen=True)
class TruncationRule:
    """``fixed`` (value = k), ``variance_fraction`` (value = q) or ``gap_budget`` (value = c)."""

    kind: Literal["fixed", "variance_fraction", "gap_budget"]
    value: float

    def __str__(self) -> str:
        v = int(self.value) if self.kind == "fixed" else self.value
        return f"{self.kind}:{v}"


def parse_rule(text: str) -> TruncationRule:
    head, _, body = text.strip().partition(":")
    aliases = {"fixed": "fixed", "k": "fixed", "variance": "variance_fraction",
               "variance_fraction": "variance_fraction", "gap": "gap_budget",
               "gap_budget": "gap_budget"}
    if head not in aliases or not body:
        raise ValueError(f"unknown truncation rule {text!r}")
    kind = aliases[head]
    value = float(body)
    if kind == "fixed" and (value != int(value) or value < 1):
        raise ValueError("fixed truncation needs a positive integer")
    if kind == "variance_fraction" and not 0 < value <= 1:
        raise ValueError("variance fraction must lie in (0, 1]")
    if kind == "gap_budget" and value <= 0:
        raise ValueError("gap budget must be positive")
    return TruncationRule(kind, value)


@dataclass(frozen=True)
class TruncationPlan:
    k: int
    rule: TruncationRule
    lambda_k: float
    lambda_rho_k: float | None = None


def ridge_floor(eigenvalues) -> float:
    return RIDGE_REL * max(float(eigenvalues[0]), 0.0)


def check_eigenvalue_floor(eigenvalues, k: int) -> None:
    floor = ridge_floor(eigenvalues)
    if eigenvalues[0] <= 0 or eigenvalues[k - 1] <= floor:
        raise AssumptionError(
            f"Assumption A2: C_{{n,k_n}} not positive (C_{{n,{k}}} = {eigenvalues[k - 1]:.3e}, "
            f"floor {floor:.3e})")


def _safe_lambda(values, k: int, fn=spectral_gap_lambda) -> float:
    try:
        return fn(with_zero_tail(values, k), k)
    except DegenerateSpectrumError:
        return math.inf


def select_truncation(emp: EmpiricalOperators, rule: TruncationRule,
                      singular_values=None) -> TruncationPlan:
    lam = np.asarray(emp.eigen_c.values)
    d, n = lam.size, emp.n
    if lam[0] <= 0:
        raise AssumptionError("Assumption A2: empirical covariance spectrum is identically zero")
    floor = ridge_floor(lam)
    positive = int(np.sum(lam > floor))
    k_cap = min(d, n - 1, positive)
    if rule.kind == "fixed":
        k = int(rule.value)
        if k > d or k >= n:
            raise ValueError(f"fixed truncation k = {k} needs k <= d = {d} and k < n = {n}")
    elif rule.kind == "variance_fraction":
        clipped = np.where(lam > floor, lam, 0.0)
        cum = np.cumsum(clipped)
        k = int(np.searchsorted(cum, rule.value * cum[-1], side="left")) + 1
        k = min(k, k_cap)
    else:
        budget = rule.value * math.sqrt(n / math.log(n)) if n > 2 else rule.value
        k = 0
        for cand in range(1, k_cap + 1):
            if cand * _safe_lambda(lam, cand) <= budget:
                k = cand
            else:
                break
        if k == 0:
            raise AssumptionError("no truncation level satisfies the gap budget")
    check_eigenvalue_floor(lam, k)
    lam_rho = None
    if singular_values is not None:
        lam_rho = _safe_lambda(singular_values, k, spectral_gap_lambda_rho)
    return TruncationPlan(k=k, rule=rule, lambda_k=_safe_lambda(lam, k), lambda_rho_k=lam_rho)


def fixed_plan(emp: EmpiricalOperators, k: int) -> TruncationPlan:
    return select_truncation(emp, TruncationRule("fixed", k))


# ---------------------------------------------------------------------------
# estimators


def projector(eigen: hc.EigenSystem, k: int) -> np.ndarray:
    """Orthogonal projection onto the span of the leading ``k`` eigenvectors."""
    v = eigen.vectors[:, :k]
    return v @ v.T


def restricted_inverse(eigen: hc.EigenSystem, k: int) -> np.ndarray:
    """Inverse of the operator restricted to its leading ``k`` eigenspace (zero elsewhere)."""
    check_eigenvalue_floor(eigen.values, k)
    v = eigen.vectors[:, :k]
    return (v / eigen.values[:k]) @ v.T


def composition(emp: EmpiricalOperators, k: int) -> np.ndarray:
    """``D_n C_n^{-1}`` with the inverse restricted to the leading ``k`` eigenspace."""
    return emp.d_n @ restricted_inverse(emp.eigen_c, k)


@dataclass(frozen=True)
class EstimatedRho:
    operator: np.ndarray
    kind: Literal["componentwise", "diagonal_svd"]
    k: int
    singular_values: np.ndarray | None = None
    right: np.ndarray | None = None
    left: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.operator.shape[0]

    def reconstruct(self) -> np.ndarray:
        if self.singular_values is None:
            return self.operator
        return (self.left * self.singular_values) @ self.right.T


def componentwise_estimator(emp: EmpiricalOperators, plan: TruncationPlan) -> EstimatedRho:
    k = plan.k
    P = projector(emp.eigen_c, k)
    op = P @ composition(emp, k) @ P
    return EstimatedRho(operator=op, kind="componentwise", k=k)


def diagonal_svd_estimator(emp: EmpiricalOperators, plan: TruncationPlan) -> EstimatedRho:
    k = plan.k
    s = hc.svd(composition(emp, k))
    vals, right, left = s.values[:k].copy(), s.right[:, :k].copy(), s.left[:, :k].copy()
    op = (left * vals) @ right.T
    return EstimatedRho(operator=op, kind="diagonal_svd", k=k, singular_values=vals,
                        right=right, left=left)


def estimate(emp: EmpiricalOperators, plan: TruncationPlan,
             kind: str = "componentwise") -> EstimatedRho:
    if kind == "componentwise":
        return componentwise_estimator(emp, plan)
    if kind in ("diagonal_svd", "diagonal"):
        return diagonal_svd_estimator(emp, plan)
    raise ValueError(f"unknown estimator kind {kind!r}")


# ---------------------------------------------------------------------------
# perturbation bounds


def eigvec_alignment_error(emp_vectors, true_vectors, k: int) -> float:
    """``max_{j <= k} || e_j - sgn<t_j, e_j> t_j ||`` over column families."""
    E = np.asarray(emp_vectors, dtype=float)
    T = np.asarray(true_vectors, dtype=float)
    if E.shape[0] != T.shape[0]:
        raise hc.DimensionError("vector families live in different dimensions")
    if E.shape[1] < k or T.shape[1] < k:
        raise ValueError(f"need at least k = {k} vectors in each family")
    return max(float(np.linalg.norm(E[:, j] - sign_align(E[:, j], T[:, j]))) for j in range(k))


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    holds: bool
    proxy: bool = False

    @classmethod
    def of(cls, lhs: float, rhs: float, proxy: bool = False) -> "BoundReport":
        return cls(lhs=float(lhs), rhs=float(rhs), holds=bool(lhs <= rhs + BOUND_SLACK),
                   proxy=proxy)


def check_eigenvector_bound(emp: EmpiricalOperators, law: StationaryLaw, plan: TruncationPlan,
                            use_true_gaps: bool = True) -> BoundReport:
    """Eigenvector alignment versus ``2 sqrt 2 Lambda_k ||C_n - C_X||_HS``.

    With ``use_true_gaps=False`` the gap quantity comes from the empirical
    spectrum and the report is marked as a proxy.
    """
    k = plan.k
    gaps_from = law.eigen.values if use_true_gaps else emp.eigen_c.values
    lam = spectral_gap_lambda(with_zero_tail(gaps_from, k), k)
    lhs = eigvec_alignment_error(emp.eigen_c.vectors, law.eigen.vectors, k)
    rhs = SQRT8 * lam * hc.hs_norm(emp.c_n - law.c_x)
    return BoundReport.of(lhs, rhs, proxy=not use_true_gaps)



def population_composition(law: StationaryLaw, k: int) -> np.ndarray:
    """``D_X C_X^{-1}`` with the inverse restricted to the leading ``k`` eigenspace of ``C_X``."""
    return law.d_x @ restricted_inverse(law.eigen, k)


@dataclass(frozen=True)
class SvdBoundReport:
    right: BoundReport
    left: BoundReport
    singular_values: BoundReport
    lambda_rho: float
    singular_sum_ok: bool
    singular_sum: float

    @property
    def holds(self) -> bool:
        return self.right.holds and self.left.holds and self.singular_values.holds


def check_bound_svd_perturbation(emp: EmpiricalOperators, law: StationaryLaw,
                                 plan: TruncationPlan) -> SvdBoundReport:
    """Singular-vector and singular-value perturbation bounds for ``T = D_n C_n^{-1}``.

    The vector bounds compare the leading right/left singular vectors of ``T``
    with those of the true ``rho`` against ``2 sqrt 2 Lambda^rho_k`` times
    ``||rho* rho - T* T||`` (right) or ``||rho rho* - T T*||`` (left). The
    singular-value bound compares ``T`` with the population composition
    formed under the same restricted inversion.
    """
    k = plan.k
    rho = law.rho
    true = hc.svd(rho)
    lam_rho = spectral_gap_lambda_rho(with_zero_tail(true.values, k), k)
    T = composition(emp, k)
    est = hc.svd(T)

    right = BoundReport.of(
        eigvec_alignment_error(est.right, true.right, k),
        SQRT8 * lam_rho * hc.operator_norm(rho.T @ rho - T.T @ T))
    left = BoundReport.of(
        eigvec_alignment_error(est.left, true.left, k),
        SQRT8 * lam_rho * hc.operator_norm(rho @ rho.T - T @ T.T))

    P = population_composition(law, k)
    sv = BoundReport.of(float(np.max(np.abs(est.values - hc.singular_values(P)))),
                        hc.operator_norm(T - P))
    top_sum = float(true.values[0] + est.values[0])
    return SvdBoundReport(right=right, left=left, singular_values=sv, lambda_rho=lam_rho,
                          singular_sum_ok=top_sum <= 1.0, singular_sum=top_sum)
