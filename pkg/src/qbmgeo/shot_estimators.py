"""Shot-based estimation of information-matrix elements.

Hardware circuits are simulated at the outcome-distribution level: each shot
computes the exact interference probability of the two-unitary Hadamard-test
primitive, then draws the +-1 outcome. A first-term draw samples evolution
times from the tent density (two independent times for Fisher-Bures, one for
Kubo-Mori), runs the primitive with U0 = exp(-iG(theta)t) and
U1 = G_i exp(-iG(theta)t) G_j, and records (-1)^b; a second-term draw measures
G_i and G_j on two independent copies of rho(theta) and records the product of
the +-1 eigenvalue outcomes. Each term uses N = ceil(2 ln(2/delta)/eps^2)
shots, so a single term honors the (eps, delta) accuracy contract and a
composed element (first minus second) honors (2 eps, 2 delta).

Every estimator draws from its own RNG stream derived from the master seed and
the element's indices, so results are bitwise reproducible for any worker
count; per-draw conditional means are evaluated in the G(theta) eigenbasis,
which the test suite cross-checks against explicitly constructed unitaries fed
through `hadamard_test_prob`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bp_channel import TentSampler, default_sampler, filter_matrix, sample_t, stream_rng
from .gibbs import ThermalState, thermal_state
from .hamiltonian import ParamHamiltonian
from .info_geometry import (
    FISHER_BURES,
    KUBO_MORI,
    METHOD_SHOT,
    InfoMatrix,
    _symmetrize_checked,
    fb_exact,
    km_exact,
)

# stream codes for the seed-split rule (master_seed, *prefix, code, i, j)
STREAM_FB_FIRST = 0
STREAM_KM_FIRST = 1
STREAM_PRODUCT = 2
STREAM_GRAD_FIRST = 3
STREAM_GRAD_PRODUCT = 4
STREAM_PAULI_MEAN = 5
STREAM_MLE_REPEAT = 6

_CHUNK = 1 << 18


@dataclass(frozen=True)
class ShotConfig:
    """Accuracy target (epsilon), failure probability (delta), and master seed."""

    epsilon: float
    delta: float
    master_seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if int(self.master_seed) < 0:
            raise ValueError("master_seed must be a non-negative 64-bit integer")

    @property
    def shots(self) -> int:
        """Hoeffding budget for a +-1 random variable: N = ceil(2 ln(2/delta)/eps^2)."""
        return int(math.ceil(2.0 * math.log(2.0 / self.delta) / self.epsilon**2))


@dataclass(frozen=True)
class EstimatorReport:
    """A shot estimate with its budget and term breakdown."""

    value: float
    shots: int
    first_term: float | None = None
    second_term: float | None = None
    exact_reference: float | None = None

    @property
    def error(self) -> float | None:
        if self.exact_reference is None:
            return None
        return self.value - self.exact_reference


def hadamard_test_prob(u0: np.ndarray, u1: np.ndarray, rho: np.ndarray) -> float:
    """P(outcome 0) of the two-unitary interference primitive.

    p_b = (2 + (-1)^b Tr[(U1†U0 + U0†U1) rho]) / 4; p_0 + p_1 = 1 by
    construction, so only p_0 is returned.
    """
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u1, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if u0.shape != rho.shape or u1.shape != rho.shape:
        raise ValueError("operator dimensions do not match the state")
    eye = np.eye(rho.shape[0])
    for name, u in (("u0", u0), ("u1", u1)):
        dev = float(np.max(np.abs(u.conj().T @ u - eye)))
        if dev > 1e-10:
            raise ValueError(f"{name} is not unitary (max deviation {dev:.3e})")
    t = complex(np.trace((u1.conj().T @ u0 + u0.conj().T @ u1) @ rho))
    if abs(t.imag) > 1e-9 * (1.0 + abs(t)):
        raise ValueError(f"interference trace has imaginary residue {t.imag:.3e}")
    return float(np.clip((2.0 + t.real) / 4.0, 0.0, 1.0))


def _interference_means(ts: ThermalState, gi_eig: np.ndarray, gj_eig: np.ndarray,
                        times: np.ndarray) -> np.ndarray:
    """Re Tr[G_j e^{-iGt} G_i e^{iGt} rho] for a batch of evolution times.

    Evaluated in the G(theta) eigenbasis, where the conjugation is a pure
    phase on each eigenvalue gap.
    """
    lam = ts.rho_eigenvalues
    weights = (gj_eig * gi_eig.T * lam[:, None]).ravel()
    mu = ts.g_eigenvalues
    gaps = (mu[None, :] - mu[:, None]).ravel()
    out = np.empty(times.shape[0])
    for lo in range(0, times.shape[0], _CHUNK):
        chunk = times[lo:lo + _CHUNK]
        out[lo:lo + _CHUNK] = np.real(np.exp(1j * np.outer(chunk, gaps)) @ weights)
    return out


def _rademacher_mean(means: np.ndarray, rng: np.random.Generator) -> float:
    p0 = np.clip((1.0 + means) / 2.0, 0.0, 1.0)
    z = np.where(rng.random(means.shape[0]) < p0, 1.0, -1.0)
    return float(np.mean(z))


def _term_setup(h: ParamHamiltonian, i: int, j: int, ts: ThermalState | None):
    if not (0 <= i < h.n_params and 0 <= j < h.n_params):
        raise ValueError(f"indices ({i}, {j}) out of range [0, {h.n_params})")
    if ts is None:
        ts = thermal_state(h)
    mats = h.term_matrices()
    return ts, ts.to_eigenbasis(mats[i]), ts.to_eigenbasis(mats[j])


def exact_first_term(h: ParamHamiltonian, kind: str, i: int, j: int,
                     ts: ThermalState | None = None) -> float:
    """Exact value targeted by the first-term estimators (for error reporting)."""
    ts, gi, gj = _term_setup(h, i, j, ts)
    lam = ts.rho_eigenvalues.astype(complex)
    filt = filter_matrix(ts.g_eigenvalues)
    if kind == FISHER_BURES:
        t = complex(np.einsum("kl,l,lk->", filt * gi, lam, filt * gj))
    elif kind == KUBO_MORI:
        t = complex(np.einsum("kl,l,lk->", gi, lam, filt * gj))
    else:
        raise ValueError(f"unknown matrix kind {kind!r}")
    return t.real


def exact_product_term(h: ParamHamiltonian, i: int, j: int,
                       ts: ThermalState | None = None) -> float:
    """<G_i><G_j>, the two-copy product target."""
    ts, gi, gj = _term_setup(h, i, j, ts)
    lam = ts.rho_eigenvalues
    mi = float(np.real(np.sum(np.diagonal(gi) * lam)))
    mj = float(np.real(np.sum(np.diagonal(gj) * lam)))
    return mi * mj


def estimate_fb_first_term(h: ParamHamiltonian, i: int, j: int, cfg: ShotConfig,
                           ts: ThermalState | None = None,
                           rng: np.random.Generator | None = None,
                           sampler: TentSampler | None = None,
                           stream_prefix: tuple[int, ...] = ()) -> EstimatorReport:
    """Unbiased N-shot estimate of 1/2 <{Phi(G_i), Phi(G_j)}>_rho.

    Per draw: t1, t2 sampled independently from the tent density, then one
    Hadamard-test outcome at evolution time t1 - t2.
    """
    ts, gi, gj = _term_setup(h, i, j, ts)
    if rng is None:
        rng = stream_rng(cfg.master_seed, *stream_prefix, STREAM_FB_FIRST, i, j)
    if sampler is None:
        sampler = default_sampler()
    n = cfg.shots
    t1 = sample_t(sampler, rng, size=n)
    t2 = sample_t(sampler, rng, size=n)
    value = _rademacher_mean(_interference_means(ts, gi, gj, t1 - t2), rng)
    return EstimatorReport(
        value=value, shots=n, first_term=value,
        exact_reference=exact_first_term(h, FISHER_BURES, i, j, ts),
    )


def estimate_km_first_term(h: ParamHamiltonian, i: int, j: int, cfg: ShotConfig,
                           ts: ThermalState | None = None,
                           rng: np.random.Generator | None = None,
                           sampler: TentSampler | None = None,
                           stream_prefix: tuple[int, ...] = ()) -> EstimatorReport:
    """Unbiased N-shot estimate of 1/2 <{G_i, Phi(G_j)}>_rho (single sampled time)."""
    ts, gi, gj = _term_setup(h, i, j, ts)
    if rng is None:
        rng = stream_rng(cfg.master_seed, *stream_prefix, STREAM_KM_FIRST, i, j)
    if sampler is None:
        sampler = default_sampler()
    n = cfg.shots
    t = sample_t(sampler, rng, size=n)
    value = _rademacher_mean(_interference_means(ts, gi, gj, t), rng)
    return EstimatorReport(
        value=value, shots=n, first_term=value,
        exact_reference=exact_first_term(h, KUBO_MORI, i, j, ts),
    )


def _pauli_outcomes(mean: float, rng: np.random.Generator, n: int) -> np.ndarray:
    p_plus = np.clip((1.0 + mean) / 2.0, 0.0, 1.0)
    return np.where(rng.random(n) < p_plus, 1.0, -1.0)


def estimate_product_term(h: ParamHamiltonian, i: int, j: int, cfg: ShotConfig,
                          ts: ThermalState | None = None,
                          rng: np.random.Generator | None = None,
                          stream_prefix: tuple[int, ...] = ()) -> EstimatorReport:
    """Unbiased N-shot estimate of <G_i><G_j> from two fresh state copies per shot.

    Pauli terms have +-1 eigenvalues, so each copy yields a +-1 outcome with
    the eigenprojector weights; the outcomes are drawn independently (i first,
    then j) and their products averaged.
    """
    ts, gi, gj = _term_setup(h, i, j, ts)
    if rng is None:
        rng = stream_rng(cfg.master_seed, *stream_prefix, STREAM_PRODUCT, i, j)
    lam = ts.rho_eigenvalues
    mi = float(np.real(np.sum(np.diagonal(gi) * lam)))
    mj = float(np.real(np.sum(np.diagonal(gj) * lam)))
    n = cfg.shots
    s_i = _pauli_outcomes(mi, rng, n)
    s_j = _pauli_outcomes(mj, rng, n)
    value = float(np.mean(s_i * s_j))
    return EstimatorReport(
        value=value, shots=n, first_term=value, exact_reference=mi * mj,
    )


@dataclass(frozen=True)
class ShotMatrixResult:
    """Shot-estimated information matrix with per-element reports and accounting."""

    matrix: InfoMatrix
    element_reports: tuple = field(repr=False)
    total_shots: int
    max_dev_from_exact: float | None = None


def estimate_matrix(h: ParamHamiltonian, kind: str, cfg: ShotConfig,
                    ts: ThermalState | None = None,
                    include_exact: bool = False,
                    workers: int = 1,
                    stream_prefix: tuple[int, ...] = ()) -> ShotMatrixResult:
    """Estimate all J^2 elements as first term minus product term, then symmetrize.

    Per-element RNG streams are derived from (master_seed, *stream_prefix,
    code, i, j), so the result does not depend on the worker count and is
    bitwise reproducible for a fixed master seed.
    """
    if kind not in (FISHER_BURES, KUBO_MORI):
        raise ValueError(f"unknown matrix kind {kind!r}")
    if ts is None:
        ts = thermal_state(h)
    sampler = default_sampler()
    first_fn = estimate_fb_first_term if kind == FISHER_BURES else estimate_km_first_term
    n_params = h.n_params

    def element(idx: int) -> EstimatorReport:
        i, j = divmod(idx, n_params)
        first = first_fn(h, i, j, cfg, ts=ts, sampler=sampler, stream_prefix=stream_prefix)
        second = estimate_product_term(h, i, j, cfg, ts=ts, stream_prefix=stream_prefix)
        return EstimatorReport(
            value=first.value - second.value,
            shots=first.shots + second.shots,
            first_term=first.value,
            second_term=second.value,
            exact_reference=first.exact_reference - second.exact_reference,
        )

    indices = range(n_params * n_params)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(element, indices))
    else:
        reports = [element(idx) for idx in indices]

    raw = np.array([r.value for r in reports]).reshape(n_params, n_params)
    values = _symmetrize_checked(raw, tol=np.inf)  # shot noise: symmetrize unconditionally
    matrix = InfoMatrix(values=values, kind=kind, method=METHOD_SHOT, theta=h.theta)
    max_dev = None
    if include_exact:
        exact = (fb_exact if kind == FISHER_BURES else km_exact)(h, ts).values
        max_dev = float(np.max(np.abs(values - exact)))
    grid = tuple(tuple(reports[i * n_params + j] for j in range(n_params)) for i in range(n_params))
    return ShotMatrixResult(
        matrix=matrix,
        element_reports=grid,
        total_shots=sum(r.shots for r in reports),
        max_dev_from_exact=max_dev,
    )
