"""ARH(1) models, their stationary second-order law, and trajectory simulation.

A model is ``X_t = rho(X_{t-1}) + eps_t`` on the d-dimensional coordinate
space, with zero-mean i.i.d. innovations of covariance ``c_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from arh1 import hilbert as hc

TAU_SERIES = 1e-12
MAX_SERIES_TERMS = 10_000
BOUND_FACTOR = 6.0

InnovationLaw = Literal["gaussian", "truncated_gaussian"]


class ModelError(ValueError):
    """Raised for models that violate the ARH(1) hypotheses."""


# ---------------------------------------------------------------------------
# operator constructors


@dataclass(frozen=True)
class RhoSpec:
    """Recipe for a test autocorrelation operator.

    ``kind`` is one of ``"diagonal"``, ``"rotated_diagonal"`` or ``"kernel"``.
    For the first two, ``sigma`` lists the singular values (padded with zeros
    up to ``d``). For ``"kernel"``, ``kernel`` names the integral kernel
    (``"gaussian"`` or ``"brownian"``), ``sigma[0]`` is the target operator
    norm and ``length_scale`` applies to the gaussian kernel.
    """

    kind: str
    sigma: tuple[float, ...] = ()
    seed: int = 0
    kernel: str = "gaussian"
    length_scale: float = 0.2
    text: str = ""

    def __str__(self) -> str:
        return self.text or f"{self.kind}:{','.join(map(repr, self.sigma))}"


def _parse_floats(body: str) -> list[float]:
    return [float(x) for x in body.split(",") if x.strip()]


def _power_sequence(body: str, d: int) -> tuple[float, ...]:
    vals = _parse_floats(body)
    if len(vals) != 2:
        raise ValueError(f"power spectrum needs 'scale,exponent', got {body!r}")
    scale, expo = vals
    return tuple(scale * j ** (-expo) for j in range(1, d + 1))


def parse_rho_spec(text: str, d: int) -> RhoSpec:
    """Parse a compact operator description.

    Grammar::

        zero
        diag:s1,s2,...            power:scale,exponent
        rotdiag:s1,s2,...[@seed]  rotpower:scale,exponent[@seed]
        kernel:gaussian,norm[,length_scale] | kernel:brownian,norm
    """
    text = text.strip()
    head, _, body = text.partition(":")
    seed = 0
    if "@" in body:
        body, _, seed_txt = body.partition("@")
        seed = int(seed_txt)
    if head == "zero":
        return RhoSpec("diagonal", (0.0,) * d, text=text)
    if head == "diag":
        return RhoSpec("diagonal", tuple(_parse_floats(body)), text=text)
    if head == "power":
        return RhoSpec("diagonal", _power_sequence(body, d), text=text)
    if head == "rotdiag":
        return RhoSpec("rotated_diagonal", tuple(_parse_floats(body)), seed=seed, text=text)
    if head == "rotpower":
        return RhoSpec("rotated_diagonal", _power_sequence(body, d), seed=seed, text=text)
    if head == "kernel":
        parts = [p.strip() for p in body.split(",")]
        if len(parts) < 2:
            raise ValueError(f"kernel spec needs 'name,norm', got {text!r}")
        ls = float(parts[2]) if len(parts) > 2 else 0.2
        return RhoSpec("kernel", (float(parts[1]),), kernel=parts[0], length_scale=ls, text=text)
    raise ValueError(f"unknown operator spec {text!r}")


def _padded(sigma: Sequence[float], d: int) -> np.ndarray:
    s = np.asarray(sigma, dtype=float)
    if s.size > d:
        raise ValueError(f"{s.size} singular values given for dimension {d}")
    return np.concatenate([s, np.zeros(d - s.size)])


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def _kernel_matrix(name: str, d: int, length_scale: float) -> np.ndarray:
    t = (np.arange(d) + 0.5) / d
    s, u = np.meshgrid(t, t, indexing="ij")
    if name == "gaussian":
        K = np.exp(-((s - u) ** 2) / (2.0 * length_scale**2))
    elif name == "brownian":
        K = np.minimum(s, u)
    else:
        raise ValueError(f"unknown kernel {name!r}")
    return K / d


def build_rho(spec: RhoSpec, d: int) -> np.ndarray:
    if spec.kind == "diagonal":
        rho = np.diag(_padded(spec.sigma, d))
    elif spec.kind == "rotated_diagonal":
        s = _padded(spec.sigma, d)
        if np.any(s < 0):
            raise ValueError("singular values must be non-negative")
        rng = np.random.default_rng(spec.seed)
        u = random_orthogonal(d, rng)
        v = random_orthogonal(d, rng)
        rho = (u * s) @ v.T
    elif spec.kind == "kernel":
        K = _kernel_matrix(spec.kernel, d, spec.length_scale)
        top = hc.operator_norm(K)
        rho = K * (spec.sigma[0] / top) if top > 0 else K
    else:
        raise ValueError(f"unknown operator kind {spec.kind!r}")
    if verify_contraction(rho, d) is None:
        raise ModelError(f"no power k <= {d} of the operator {spec} has norm below 1")
    return rho


def verify_contraction(rho, k_max: int) -> int | None:
    """Smallest ``k0 <= k_max`` with ``||rho^k0|| < 1``, or ``None``."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    rho = hc.as_operator(rho)
    P = rho.copy()
    for k in range(1, k_max + 1):
        if hc.operator_norm(P) < 1.0:
            return k
        P = P @ rho
    return None


def parse_covariance_spec(text: str, d: int) -> np.ndarray:
    """Innovation covariance from ``power:scale,exponent``, ``diag:c1,...`` or ``zero``."""
    text = text.strip()
    head, _, body = text.partition(":")
    if head == "zero":
        return np.zeros((d, d))
    if head == "power":
        return np.diag(_power_sequence(body, d))
    if head == "diag":
        return np.diag(_padded(_parse_floats(body), d))
    raise ValueError(f"unknown covariance spec {text!r}")


def default_innovation_covariance(d: int) -> np.ndarray:
    return np.diag([j ** -2.0 for j in range(1, d + 1)])


# ---------------------------------------------------------------------------
# model and stationary law


@dataclass(frozen=True)
class ARHModel:
    rho: np.ndarray
    c_eps: np.ndarray
    law: InnovationLaw = "gaussian"
    bound: float | None = None
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rho = hc.as_operator(self.rho)
        c = hc.as_operator(self.c_eps, rho.shape[0])
        if self.law not in ("gaussian", "truncated_gaussian"):
            raise ModelError(f"unknown innovation law {self.law!r}")
        if hc.hs_norm(c - c.T) > 1e-12 * max(hc.hs_norm(c), 1e-300):
            raise ModelError("innovation covariance is not symmetric")
        if np.linalg.eigvalsh(c).min(initial=0.0) < -1e-12 * max(hc.operator_norm(c), 1.0):
            raise ModelError("innovation covariance is not positive semidefinite")
        if verify_contraction(rho, rho.shape[0]) is None:
            raise ModelError("autocorrelation operator is not eventually contractive")
        if self.law == "truncated_gaussian" and self.bound is None:
            object.__setattr__(self, "bound", BOUND_FACTOR * math.sqrt(np.trace(c)))

    @property
    def d(self) -> int:
        return self.rho.shape[0]

    def trajectory_bound(self) -> float:
        """A.s. bound on ``||X_t||`` under the truncated law, ``M / (1 - ||rho||)``."""
        r = hc.operator_norm(self.rho)
        if self.bound is None or r >= 1.0:
            return math.inf
        return self.bound / (1.0 - r)


def make_model(rho: str, d: int, c_eps: str = "power:1,2", law: InnovationLaw = "gaussian",
               bound: float | None = None) -> ARHModel:
    """Model from the compact textual specs used by the CLI and config files."""
    return ARHModel(
        rho=build_rho(parse_rho_spec(rho, d), d),
        c_eps=parse_covariance_spec(c_eps, d),
        law=law,
        bound=bound,
        spec={"rho": rho, "c_eps": c_eps, "law": law, "bound": bound, "d": d},
    )


@dataclass(frozen=True)
class StationaryLaw:
    """Exact second-order structure of the stationary solution.

    ``rho`` is carried along so bound checks can reach the true operator.
    """

    c_x: np.ndarray
    d_x: np.ndarray
    eigen: hc.EigenSystem
    rho: np.ndarray


def stationary_law(model: ARHModel, tau: float = TAU_SERIES,
                   max_terms: int = MAX_SERIES_TERMS) -> StationaryLaw:
    """Sum ``C_X = sum_k rho^k C_eps (rho*)^k`` and set ``D_X = rho C_X``."""
    rho, c = model.rho, model.c_eps
    total = c.copy()
    term = c.copy()
    for _ in range(max_terms):
        term = rho @ term @ rho.T
        total += term
        if hc.hs_norm(term) <= tau * max(hc.hs_norm(total), 1e-300):
            break
    else:
        raise ModelError(f"stationary covariance series did not converge in {max_terms} terms")
    c_x = 0.5 * (total + total.T)
    return StationaryLaw(c_x=c_x, d_x=rho @ c_x, eigen=hc.eigen_sym(c_x), rho=rho.copy())


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class Trajectory:
    """Samples ``X_0 .. X_{n-1}`` stored as rows of an ``(n, d)`` array.

    ``innovations[t - 1]`` is the innovation that produced ``X_t``; it is
    recorded by the simulator and absent for ingested data.
    """

    samples: np.ndarray
    seed: int | None = None
    burn_in: int = 0
    model_id: dict | None = None
    innovations: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"samples must be a 2-D (n, d) array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("trajectory has non-finite samples")
        object.__setattr__(self, "samples", x)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


def covariance_factor(c: np.ndarray) -> np.ndarray:
    """Symmetric square root ``L`` with ``L L^T = c`` (tolerates singular ``c``)."""
    w, v = np.linalg.eigh(0.5 * (c + c.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def make_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Generator for ``seed`` and an optional stream key.

    Replication ``r`` at sample size ``n`` uses ``make_rng(master, (n, r))``;
    numpy's SeedSequence spawning keeps such streams independent.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


def _draw_innovations(model: ARHModel, count: int, rng: np.random.Generator,
                      factor: np.ndarray) -> np.ndarray:
    eps = rng.standard_normal((count, model.d)) @ factor.T
    if model.law == "truncated_gaussian":
        bad = np.linalg.norm(eps, axis=1) > model.bound
        while np.any(bad):
            eps[bad] = rng.standard_normal((int(bad.sum()), model.d)) @ factor.T
            bad = np.linalg.norm(eps, axis=1) > model.bound
    return eps


def simulate(model: ARHModel, n: int, burn_in: int = 0, seed: int = 0,
             stream: Sequence[int] = (), x0=None) -> Trajectory:
    """Simulate a stationary trajectory of length ``n``.

    Under the gaussian law the run starts from an exact draw of
    ``N(0, C_X)``. Under the truncated law every innovation with norm above
    ``model.bound`` is redrawn and the run starts from one such bounded
    innovation, so every state stays below ``model.trajectory_bound()``;
    use ``burn_in`` to approach stationarity. ``x0`` overrides the start.
    """
    if n < 2:
        raise ValueError("a trajectory needs n >= 2 samples")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = make_rng(seed, stream)
    eps_factor = covariance_factor(model.c_eps)
    if x0 is not None:
        x = hc.as_vector(x0, model.d).copy()
    elif model.law == "gaussian":
        x = covariance_factor(stationary_law(model).c_x) @ rng.standard_normal(model.d)
    else:
        x = _draw_innovations(model, 1, rng, eps_factor)[0]
    eps = _draw_innovations(model, burn_in + n - 1, rng, eps_factor)
    rho = model.rho
    for t in range(burn_in):
        x = rho @ x + eps[t]
    out = np.empty((n, model.d))
    out[0] = x
    for t in range(1, n):
        x = rho @ x + eps[burn_in + t - 1]
        out[t] = x
    return Trajectory(samples=out, seed=seed, burn_in=burn_in, model_id=model.spec or None,
                      innovations=eps[burn_in:].copy())
