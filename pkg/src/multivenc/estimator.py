"""Joint velocity estimation from all pairwise phase differences.

The noise on the phase differences is ``eps = B theta`` for per-point phase
noise ``theta``, so under the first-order model its covariance
``Sigma = B diag(zeta) B^T`` has rank ``L - 1``.  Where a weight matrix
``Sigma^{-1}`` is called for we use the Moore-Penrose pseudo-inverse; the
data and ``A`` both lie in the range of ``B`` so the normal matrix
``A^T Sigma^+ A`` stays invertible.

``second_order`` adds the independent product term ``n_i conj(n_j)`` of each
conjugate multiply, giving a full-rank, SNR-dependent covariance under which
pre-processing is strictly lossy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .encoding import CongruenceSystem, DifferenceSystem, EncodingScheme, Preprocessor, pair_incidence, pair_order
from .errors import DimensionError, IndeterminatePhaseError, RankDeficiencyError
from .lattice import AmbiguityLattice, Parallelepiped, ambiguity_lattice, centered_parallelepiped

__all__ = [
    "PhaseDifferences",
    "NoiseModel",
    "VelocityEstimate",
    "JointEstimator",
    "wrap_phase",
    "phase_differences",
    "noise_covariance",
    "weighted_solve",
    "wrap_search",
    "noise_sensitivity",
    "preprocessed_sensitivity",
]

PINV_RTOL = 1e-10
COST_ATOL = 1e-12
COST_RTOL = 1e-9
# inconsistent wrap vectors leave >= 2 pi / sqrt(3) outside range(Sigma)
CONSISTENCY_TOL = np.pi / 2


def wrap_phase(x):
    """Wrap angles to ``(-pi, pi]``."""
    out = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhaseDifferences:
    values: np.ndarray
    pair_order: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.values) != len(self.pair_order):
            raise DimensionError("one phase value per pair is required")


def phase_differences(y) -> PhaseDifferences:
    """Angles of ``sum_c y_i^(c) conj(y_j^(c))`` for every pair ``i > j``.

    ``y`` is length ``L`` (one coil) or ``coils x L``.
    """
    y = np.asarray(y, dtype=complex)
    if y.ndim == 1:
        y = y[None, :]
    L = y.shape[1]
    pairs = pair_order(L)
    i = np.array([p[0] - 1 for p in pairs])
    j = np.array([p[1] - 1 for p in pairs])
    prod = np.sum(y[:, i] * np.conj(y[:, j]), axis=0)
    if np.any(prod == 0):
        raise IndeterminatePhaseError("indeterminate phase: a conjugate product is exactly zero")
    return PhaseDifferences(values=wrap_phase(np.angle(prod)), pair_order=tuple(pairs))


@dataclass(frozen=True)
class NoiseModel:
    sigma_matrix: np.ndarray
    pseudo_inverse: np.ndarray
    rank: int
    model: str = "first_order"


def _psd_pinv(S: np.ndarray, rtol: float = PINV_RTOL) -> tuple[np.ndarray, int]:
    S = (S + S.T) / 2
    w, U = np.linalg.eigh(S)
    keep = w > rtol * max(w.max(), 0.0)
    inv = (U[:, keep] / w[keep]) @ U[:, keep].T
    return (inv + inv.T) / 2, int(keep.sum())


def noise_covariance(s: EncodingScheme, coils: int = 1, model: str = "first_order") -> NoiseModel:
    """Covariance of the phase-difference noise.

    First order: per-point phase variance ``zeta_l = sigma^2 / (2 C a_l^2)``
    for ``C`` coils, ``Sigma = B diag(zeta) B^T``.  Second order adds
    ``sigma^4 / (2 C a_i^2 a_j^2)`` on the diagonal for pair ``(i, j)``.
    """
    if coils < 1:
        raise ValueError("coils must be >= 1")
    a = np.asarray(s.magnitudes, dtype=float)
    var = s.noise_std ** 2
    zeta = var / (2 * coils * a ** 2)
    B = pair_incidence(s.L).astype(float)
    S = (B * zeta) @ B.T
    if model == "second_order":
        pairs = pair_order(s.L)
        S = S + np.diag([var ** 2 / (2 * coils * a[i - 1] ** 2 * a[j - 1] ** 2) for i, j in pairs])
    elif model != "first_order":
        raise ValueError(f"unknown noise model {model!r}")
    pinv, rank = _psd_pinv(S)
    return NoiseModel(sigma_matrix=S, pseudo_inverse=pinv, rank=rank, model=model)


def _normal_matrix(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    F = A.T @ W @ A
    F = (F + F.T) / 2
    if np.linalg.matrix_rank(F) < 3:
        raise RankDeficiencyError("A^T Sigma^+ A is singular")
    return F


@dataclass(frozen=True)
class VelocityEstimate:
    v_hat: np.ndarray
    k_hat: np.ndarray
    cost: float
    covariance: np.ndarray


def weighted_solve(d: CongruenceSystem, phi, k, nm: NoiseModel) -> tuple[np.ndarray, float]:
    """``v = (A^T W A)^{-1} A^T W (phi + 2 pi k)`` and its weighted residual."""
    A = d.A
    W = nm.pseudo_inverse
    phi = np.asarray(getattr(phi, "values", phi), dtype=float)
    target = phi + 2 * np.pi * np.asarray(k, dtype=float)
    F = _normal_matrix(A, W)
    v = np.linalg.solve(F, A.T @ W @ target)
    r = target - A @ v
    return v, float(max(r @ W @ r, 0.0))


class JointEstimator:
    """Wrap-integer search over a fundamental cell, set up once per system.

    Candidate wrap vectors come from rounding ``(A u - phi) / 2 pi`` over a
    grid of points ``u`` covering the region.  The grid's covering radius is
    at most ``pi / (2 max_i ||A_i||)``, so every row residual at the nearest
    grid point is within ``pi / 2`` and the true wrap branch is always among
    the candidates.  Each solution is reduced into the region modulo the
    lattice (with the matching shift of ``k``) before comparing costs.

    When ``Sigma`` is singular, the weighted cost is blind to residuals
    outside its range; a wrap vector breaking the cycle relations
    ``phi_31 = phi_32 + phi_21 (mod 2 pi)`` has zero likelihood there, so
    candidates whose out-of-range residual exceeds ``CONSISTENCY_TOL`` are
    discarded.
    """

    def __init__(
        self,
        d: CongruenceSystem,
        nm: NoiseModel,
        region: Optional[Parallelepiped] = None,
        lattice: Optional[AmbiguityLattice] = None,
    ):
        self.system = d
        self.noise = nm
        self.A = d.A
        if nm.sigma_matrix.shape != (len(self.A), len(self.A)):
            raise DimensionError("noise model does not match the number of phase differences")
        W = nm.pseudo_inverse
        F = _normal_matrix(self.A, W)
        self.covariance = np.linalg.inv(F)
        self.covariance = (self.covariance + self.covariance.T) / 2
        self.gain = self.covariance @ self.A.T @ W
        self._perp = np.eye(len(self.A)) - nm.sigma_matrix @ W
        self.lattice = lattice if lattice is not None else ambiguity_lattice(d)
        self.region = region if region is not None else centered_parallelepiped(self.lattice)
        self._region_inv = np.linalg.inv(self.region.edges)
        self._region_shifts = np.rint(self.A @ self.region.edges / (2 * np.pi)).astype(np.int64)
        if not np.allclose(self.A @ self.region.edges / (2 * np.pi), self._region_shifts, atol=1e-9):
            raise ValueError("region edges must be lattice vectors")
        self.grid = self._grid()

    def _grid(self) -> np.ndarray:
        row_norm = np.linalg.norm(self.A, axis=1).max()
        delta = np.pi / (math.sqrt(3) * row_norm)
        # parallelepiped cell edges h_i <= delta / sqrt(3) keep the covering
        # radius (sum h_i) / 2 within the axis-aligned bound sqrt(3) delta / 2
        h = delta / math.sqrt(3)
        axes = []
        for e in self.region.edges.T:
            n = max(1, math.ceil(np.linalg.norm(e) / h))
            axes.append(np.linspace(0.0, 1.0, n + 1))
        alpha = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        return self.region.origin + alpha @ self.region.edges.T

    def estimate(self, phi) -> VelocityEstimate:
        phi = np.asarray(getattr(phi, "values", phi), dtype=float)
        v, k, cost = self.estimate_batch(phi[None, :])
        return VelocityEstimate(v_hat=v[0], k_hat=k[0], cost=float(cost[0]), covariance=self.covariance.copy())

    def estimate_batch(self, phis: np.ndarray, chunk: Optional[int] = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised search for a ``T x N`` stack of phase-difference vectors."""
        phis = np.atleast_2d(np.asarray(phis, dtype=float))
        T, N = phis.shape
        if chunk is None:
            chunk = max(1, 2_000_000 // (len(self.grid) * N))
        if N != len(self.A):
            raise DimensionError(f"expected {len(self.A)} phase differences, got {N}")
        v_out = np.empty((T, 3))
        k_out = np.empty((T, N), dtype=np.int64)
        c_out = np.empty(T)
        Au = self.grid @ self.A.T
        W = self.noise.pseudo_inverse
        for s in range(0, T, chunk):
            ph = phis[s:s + chunk]
            K = np.rint((Au[None, :, :] - ph[:, None, :]) / (2 * np.pi)).astype(np.int64)
            target = ph[:, None, :] + 2 * np.pi * K
            V = target @ self.gain.T
            # reduce into the region modulo the lattice
            shift = np.floor((V - self.region.origin) @ self._region_inv.T)
            V = V - shift @ self.region.edges.T
            K = K - shift.astype(np.int64) @ self._region_shifts.T
            target = ph[:, None, :] + 2 * np.pi * K
            r = target - V @ self.A.T
            cost = np.maximum(np.sum((r @ W) * r, axis=-1), 0.0)
            outside = np.linalg.norm(r @ self._perp.T, axis=-1) > CONSISTENCY_TOL
            key = np.where(outside, np.inf, cost)
            none_ok = np.all(outside, axis=1)
            key[none_ok] = cost[none_ok]
            best = self._select(key, V)
            rows = np.arange(len(ph))
            v_out[s:s + chunk] = V[rows, best]
            k_out[s:s + chunk] = K[rows, best]
            c_out[s:s + chunk] = cost[rows, best]
        return v_out, k_out, c_out

    @staticmethod
    def _select(cost: np.ndarray, V: np.ndarray) -> np.ndarray:
        cmin = cost.min(axis=1, keepdims=True)
        tied = cost <= cmin * (1 + COST_RTOL) + COST_ATOL
        norm = np.where(tied, np.linalg.norm(V, axis=-1), np.inf)
        return np.argmin(norm, axis=1)


def wrap_search(d: CongruenceSystem, phi, nm: NoiseModel, region: Optional[Parallelepiped] = None) -> VelocityEstimate:
    """Approximate ML velocity: best wrap vector over the region's candidates.

    Ties in cost go to the smaller ``||v_hat||``.  For repeated calls on the
    same system build a :class:`JointEstimator` once instead.
    """
    return JointEstimator(d, nm, region=region).estimate(phi)


def noise_sensitivity(d: CongruenceSystem, nm: NoiseModel) -> float:
    """Uncertainty-ellipsoid volume ``1 / det(A^T Sigma^+ A)``."""
    return float(1.0 / np.linalg.det(_normal_matrix(d.A, nm.pseudo_inverse)))


def preprocessed_sensitivity(p: Preprocessor, d: DifferenceSystem, nm: NoiseModel) -> float:
    """``1 / det(A^T P^T (P Sigma P^T)^+ P A)``."""
    P = p.P.to_array()
    if P.shape[1] != len(d.A):
        raise DimensionError(f"P has {P.shape[1]} columns, system has {len(d.A)} rows")
    PA = P @ d.A
    if np.linalg.matrix_rank(PA) < 3:
        raise RankDeficiencyError(f"rank(P A) < 3 for preprocessor {p.name}")
    Wp, _ = _psd_pinv(P @ nm.sigma_matrix @ P.T)
    return float(1.0 / np.linalg.det(_normal_matrix(PA, Wp)))


def preprocessed_gain(p: Preprocessor, d: DifferenceSystem, nm: NoiseModel) -> np.ndarray:
    """Linear map from unwrapped phase differences to the pre-processed estimate."""
    P = p.P.to_array()
    PA = P @ d.A
    Wp, _ = _psd_pinv(P @ nm.sigma_matrix @ P.T)
    F = _normal_matrix(PA, Wp)
    return np.linalg.solve(F, PA.T @ Wp @ P)
