"""One-shot and von Neumann entropies, smoothing, conditional min-entropy.

All entropies are in bits.  Smoothing is over *subnormalized* states within
purified distance epsilon; because of the subnormalization slack the smoothed
min-entropy of a normalized state can exceed ``log2 d`` by up to
``log2 1/(1 - eps^2)``.

Soundness directions: :func:`h_min_smooth` evaluates a feasible candidate
family (eigenvalue caps) and is therefore a certified *lower* bound on the
smoothed min-entropy; :func:`h_max_smooth` (tail removal) is a certified
*upper* bound on the smoothed max-entropy.  Criterion consumers can use both
conservatively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .linalg import DensityMatrix, PureState, hermitian_eig

EIGENVALUE_TOL = 1e-10
SDP_MAX_DIM = 256


def spectrum_of(x) -> np.ndarray:
    """Descending eigenvalue vector of a state; 1-D input is passed through."""
    if isinstance(x, DensityMatrix):
        return x.spectrum()
    if isinstance(x, PureState):
        return x.density().spectrum()
    a = np.asarray(x)
    if a.ndim == 1:
        lam = np.sort(a.real)[::-1]
    else:
        lam = np.linalg.eigvalsh(a)[::-1].real
    if lam.size == 0 or lam.max(initial=0.0) <= 0.0:
        raise ValueError("zero or empty spectrum")
    if lam.min() < -EIGENVALUE_TOL * max(1.0, lam.max()):
        raise ValueError("negative eigenvalue beyond tolerance")
    return np.clip(lam, 0.0, None)


def h_min(rho) -> float:
    """Min-entropy ``-log2 max_j lambda_j``."""
    return float(-np.log2(spectrum_of(rho)[0]))


def h_max(rho) -> float:
    """Max-entropy (Renyi-1/2) ``2 log2 sum_j sqrt(lambda_j)``."""
    return float(2.0 * np.log2(np.sqrt(spectrum_of(rho)).sum()))


def shannon(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if p.min(initial=0.0) < -EIGENVALUE_TOL:
        raise ValueError("negative probability beyond tolerance")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0]
    # + 0.0 turns the -0.0 of a deterministic distribution into +0.0
    return float(-(nz * np.log2(nz)).sum() + 0.0)


def von_neumann(rho) -> float:
    """von Neumann entropy in bits."""
    return shannon(spectrum_of(rho))


def _smooth_target(eps: float) -> float:
    if not 0.0 <= eps < 1.0:
        raise ValueError("epsilon must be in [0, 1)")
    return float(np.sqrt(1.0 - eps * eps))


def _best_capped_fidelity(lam: np.ndarray, m: float) -> float:
    """Largest generalized fidelity to ``lam`` over commuting candidates with
    every eigenvalue at most m and trace at most 1.

    Candidates: the plain cap ``min(lambda_i, m)`` and the water-filled
    allocations ``min(m, t lambda_i)`` that spend the full unit budget; each
    is feasible, so the maximum is a valid (and in fact optimal) choice.
    """
    s = float(lam.sum())
    slack = max(0.0, 1.0 - s)
    cap = np.minimum(lam, m)
    best = float(np.sqrt(lam * cap).sum()
                 + np.sqrt(slack * max(0.0, 1.0 - cap.sum())))
    d = lam.size
    sqrt_lam = np.sqrt(lam)
    if d * m <= 1.0:
        # budget cannot be exhausted: every entry sits at the cap
        best = max(best, float(np.sqrt(m) * sqrt_lam.sum()
                               + np.sqrt(slack * (1.0 - d * m))))
        return best
    # top-k entries at the cap, the rest proportional to lambda
    prefix_sqrt = np.concatenate(([0.0], np.cumsum(sqrt_lam)))
    suffix_sum = np.concatenate((np.cumsum(lam[::-1])[::-1], [0.0]))
    for k in range(d):
        tail = suffix_sum[k]
        rest = 1.0 - k * m
        if rest <= 0.0 or tail <= 0.0:
            break
        t = rest / tail
        sigma_tail = np.minimum(m, t * lam[k:])
        fid = np.sqrt(m) * prefix_sqrt[k] + float(np.sqrt(lam[k:] * sigma_tail).sum())
        spent = k * m + float(sigma_tail.sum())
        fid += np.sqrt(slack * max(0.0, 1.0 - spent))
        best = max(best, float(fid))
    return best


def h_min_smooth(rho, eps: float, bisection_tol: float = 1e-14) -> float:
    """Smoothed min-entropy via the optimal commuting candidate.

    Finds the smallest spectral ceiling m for which some subnormalized
    state, diagonal in the eigenbasis of rho with all eigenvalues at most
    m, stays within purified distance eps of rho; returns ``-log2 m``.
    The search caps the large eigenvalues and water-fills the freed weight
    over the rest, which exhausts the commuting candidates.
    """
    lam = spectrum_of(rho)
    if eps == 0.0:
        _smooth_target(eps)
        return float(-np.log2(lam[0]))
    target = _smooth_target(eps)
    lo, hi = 0.0, float(lam[0])
    for _ in range(200):
        if hi - lo <= bisection_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _best_capped_fidelity(lam, mid) >= target:
            hi = mid
        else:
            lo = mid
    return float(-np.log2(hi))


def h_max_smooth(rho, eps: float) -> float:
    """Smoothed max-entropy upper bound via tail removal.

    Greedily zeroes the smallest eigenvalues (the last one partially, the
    largest never) while the purified distance stays at most eps, and
    returns the max-entropy of the surviving subnormalized spectrum.
    """
    lam = spectrum_of(rho)
    target = _smooth_target(eps)
    if eps == 0.0:
        return h_max(lam)
    # F = sum_i sqrt(lam_i sigma_i); keeping sigma_i = lam_i contributes lam_i.
    fid = float(lam.sum())
    sqrt_sum = float(np.sqrt(lam).sum())
    for x in lam[:0:-1]:  # ascending tail, largest eigenvalue excluded
        if x == 0.0:
            continue
        if fid - x >= target:
            fid -= x
            sqrt_sum -= np.sqrt(x)
        else:
            # partial removal of this eigenvalue: sigma = s <= x
            root = target - (fid - x)
            sqrt_sum -= np.sqrt(x)
            if root > 0.0:
                s = root * root / x
                sqrt_sum += np.sqrt(s)
            break
    return float(2.0 * np.log2(sqrt_sum))


def _grid_max_fidelity(lam: np.ndarray, m: float, points: int,
                       stages: int) -> float:
    """Best generalized fidelity to ``lam`` over a refining grid of candidate
    spectra confined to [0, m]^d; candidates over the unit trace budget are
    scaled back onto it."""
    d = lam.size
    slack = max(0.0, 1.0 - float(lam.sum()))
    lo = np.zeros(d)
    hi = np.full(d, m)
    best = -1.0
    for _ in range(stages):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        sigma = np.stack([g.reshape(-1) for g in grids], axis=1)
        trace = sigma.sum(axis=1)
        sigma = sigma / np.clip(trace, 1.0, None)[:, None]
        trace = np.clip(trace, None, 1.0)
        fid = np.sqrt(sigma * lam[None, :]).sum(axis=1)
        fid += np.sqrt(slack * np.clip(1.0 - trace, 0.0, None))
        idx = int(np.argmax(fid))
        best = max(best, float(fid[idx]))
        center = np.stack([g.reshape(-1) for g in grids], axis=1)[idx]
        cell = (hi - lo) / (points - 1)
        lo = np.clip(center - 2.0 * cell, 0.0, m)
        hi = np.clip(center + 2.0 * cell, 0.0, m)
    return best


def h_min_smooth_oracle(rho, eps: float, points: int = 33, stages: int = 5,
                        m_iters: int = 50) -> float:
    """Brute-force certification of :func:`h_min_smooth` for d <= 3.

    Bisects the spectral ceiling m; each feasibility test maximizes the
    generalized fidelity over a refining grid of candidate spectra in
    [0, m]^d with the trace budget enforced by rescaling.  Shares no code
    path with the structured water-filling search.
    """
    lam = spectrum_of(rho)
    if lam.size > 3:
        raise ValueError("oracle is restricted to d <= 3")
    if eps == 0.0:
        return float(-np.log2(lam[0]))
    target = _smooth_target(eps)
    lo, hi = 0.0, float(lam[0])
    for _ in range(m_iters):
        mid = 0.5 * (lo + hi)
        if _grid_max_fidelity(lam, mid, points, stages) >= target:
            hi = mid
        else:
            lo = mid
    return float(-np.log2(hi))


def h_max_smooth_oracle(rho, eps: float, grid: int = 20_001) -> float:
    """Brute-force scan over tail-removal candidates; certifies
    :func:`h_max_smooth`.

    For every count k of fully removed tail eigenvalues and a grid of
    partial removals of the next one, keeps the feasible candidate with the
    smallest surviving max-entropy.
    """
    lam = spectrum_of(rho)
    target = _smooth_target(eps)
    if eps == 0.0:
        return h_max(lam)
    best = 2.0 * np.log2(np.sqrt(lam).sum())
    d = lam.size
    for k in range(d - 1):  # k eigenvalues of the ascending tail fully removed
        tail = lam[d - k:] if k else lam[:0]
        removed = float(tail.sum())
        next_val = lam[d - 1 - k]
        if next_val == 0.0:
            fid = 1.0 - removed
            if fid >= target:
                val = 2.0 * np.log2(np.sqrt(lam[: d - 1 - k]).sum())
                best = min(best, val)
            continue
        s_grid = np.linspace(0.0, next_val, grid)
        fid = 1.0 - removed - next_val + np.sqrt(next_val * s_grid)
        ok = fid >= target
        if not ok.any():
            continue
        keep_sqrt = float(np.sqrt(lam[: d - 1 - k]).sum())
        vals = 2.0 * np.log2(keep_sqrt + np.sqrt(s_grid[ok]))
        best = min(best, float(vals.min()))
    return float(best)


# ---------------------------------------------------------------------------
# Conditional min-entropy SDP:  2^{-H_min(A|B)} = min tr sigma_B
#                               s.t. I_A (x) sigma_B >= rho_AB.
# Solved with a deterministic log-barrier Newton iteration.
# ---------------------------------------------------------------------------


@dataclass
class SdpResult:
    value: float          # H_min(A|B) in bits
    sigma: np.ndarray     # optimal conditioning operator
    gap: float            # duality gap bound on tr sigma
    converged: bool


def _hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal real basis of d x d Hermitian matrices, shape (d^2, d, d)."""
    basis = np.zeros((d * d, d, d), dtype=complex)
    m = 0
    for i in range(d):
        basis[m, i, i] = 1.0
        m += 1
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            basis[m, i, j] = inv_sqrt2
            basis[m, j, i] = inv_sqrt2
            m += 1
            basis[m, i, j] = -1j * inv_sqrt2
            basis[m, j, i] = 1j * inv_sqrt2
            m += 1
    return basis


def min_entropy_sdp(rho_ab, d_a: int, d_b: int, gap_tol: float = 1e-7,
                    max_dim: int = SDP_MAX_DIM) -> SdpResult:
    """Conditional min-entropy of a bipartite state via barrier Newton.

    The start ``sigma = (lambda_max(rho) + 0.1) I_B`` is strictly feasible;
    the barrier parameter is grown until the duality gap on ``tr sigma``
    is below ``gap_tol``.
    """
    rho = np.asarray(rho_ab.data if isinstance(rho_ab, DensityMatrix) else rho_ab,
                     dtype=complex)
    n = d_a * d_b
    if rho.shape != (n, n):
        raise ValueError("state dimension does not match d_a * d_b")
    if n > max_dim:
        raise ValueError(f"dimension {n} exceeds solver envelope {max_dim}")

    basis = _hermitian_basis(d_b)
    eye_a = np.eye(d_a, dtype=complex)
    lam_max = float(np.linalg.eigvalsh(rho)[-1])
    sigma = (lam_max + 0.1) * np.eye(d_b, dtype=complex)

    def barrier(sig, t):
        m = np.kron(eye_a, sig) - rho
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None, None
        logdet = 2.0 * np.log(np.diagonal(chol).real).sum()
        return t * sig.trace().real - logdet, chol

    t = 1.0
    converged = True
    while True:
        # Newton centering at barrier parameter t.
        for _ in range(60):
            f0, chol = barrier(sigma, t)
            if chol is None:
                raise RuntimeError("barrier iterate left the feasible cone")
            inv_m = np.linalg.inv(np.kron(eye_a, sigma) - rho)
            p4 = inv_m.reshape(d_a, d_b, d_a, d_b)
            pb = np.einsum("abad->bd", p4)
            grad = (t * np.einsum("mii->m", basis)
                    - np.einsum("bd,mdb->m", pb, basis)).real
            tensor = np.einsum("alci,cjak->ijkl", p4, p4)
            half = np.tensordot(basis, tensor, axes=([1, 2], [0, 1]))
            hess = np.tensordot(half, basis, axes=([1, 2], [1, 2])).real
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            decrement = float(-grad @ step)
            delta = np.tensordot(step, basis, axes=1)
            if decrement / 2.0 < 1e-11:
                break
            s = 1.0
            for _ in range(60):
                f1, chol1 = barrier(sigma + s * delta, t)
                if chol1 is not None and f1 <= f0 - 0.25 * s * decrement:
                    break
                s *= 0.5
            else:
                converged = False
                break
            sigma = sigma + s * delta
        if n / t <= gap_tol:
            break
        t *= 20.0

    value = float(sigma.trace().real)
    return SdpResult(value=float(-np.log2(value)), sigma=sigma,
                     gap=n / t, converged=converged)


def h_min_cond(rho: DensityMatrix, eps: float = 0.0, gap_tol: float = 1e-7) -> float:
    """``H_min(A|B)`` of a two-factor state, conditioning on the second factor.

    For ``eps > 0`` the value is improved over the restricted family
    ``(1 - delta) rho`` with ``delta <= eps^2``, giving
    ``H_min(A|B) + log2 1/(1 - eps^2)`` -- a lower bound on the smoothed
    quantity, not the full-ball optimum.
    """
    if len(rho.layout.factors) != 2:
        raise ValueError("h_min_cond expects a two-factor layout [A, B]")
    d_a, d_b = rho.layout.dims
    result = min_entropy_sdp(rho.data, d_a, d_b, gap_tol=gap_tol)
    value = result.value
    if eps > 0.0:
        value += float(np.log2(1.0 / (1.0 - eps * eps)))
    return value


# ---------------------------------------------------------------------------
# Classical conditioning (cq states) and the equal-weight pure-block closed
# form H_min^eps(A|R) = log2 1/(1 - eps^2).
# ---------------------------------------------------------------------------


def h_min_cond_cq(blocks, eps: float = 0.0) -> float:
    """Conditional min-entropy of ``sum_i w_i rho_A^(i) (x) |i><i|_R``.

    At eps = 0 this is ``-log2 sum_i w_i lambda_max(rho_i)``.  For eps > 0
    only the equal-weight pure-block case is supported, where the optimal
    smoothing ansatz ``sigma_i = (1 - eps^2)/n |psi_i><psi_i|`` gives the
    closed form ``log2 1/(1 - eps^2)``.
    """
    weights = np.array([w for w, _ in blocks], dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("block weights must sum to 1")
    states = [np.asarray(r.data if isinstance(r, DensityMatrix) else r, dtype=complex)
              for _, r in blocks]
    if eps == 0.0:
        tops = np.array([np.linalg.eigvalsh(s)[-1].real for s in states])
        return float(-np.log2((weights * tops).sum()))
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must be in [0, 1)")
    n = len(blocks)
    equal = np.allclose(weights, 1.0 / n, atol=1e-9)
    pure = all(abs((s @ s).trace().real - s.trace().real ** 2) < 1e-9 for s in states)
    if not (equal and pure):
        raise ValueError("eps > 0 requires equal-weight pure blocks")
    mu = (1.0 - eps * eps) / n
    return float(-np.log2(n * mu))


def cq_ansatz_optimum(n: int, eps: float) -> float:
    """Numerical optimization of the pure-block smoothing ansatz.

    Maximizes ``-log2 sum_i mu_i`` over ``mu >= 0`` subject to the purified
    distance constraint ``(1/sqrt(n)) sum_i sqrt(mu_i) >= sqrt(1 - eps^2)``;
    independent check of the closed form in :func:`h_min_cond_cq`.
    """
    target = _smooth_target(eps)
    x0 = np.full(n, 0.99)  # strictly feasible start
    cons = [{"type": "ineq",
             "fun": lambda mu: np.sqrt(np.clip(mu, 0, None)).sum() / np.sqrt(n) - target}]
    res = optimize.minimize(lambda mu: mu.sum(), x0, method="SLSQP",
                            bounds=[(0.0, 1.0)] * n, constraints=cons,
                            options={"ftol": 1e-14, "maxiter": 500})
    if not res.success:
        raise RuntimeError(f"ansatz optimizer failed: {res.message}")
    return float(-np.log2(res.fun))


def default_chain_correction(eps: float) -> float:
    """Default stand-in for the unspecified O(log 1/eps) chain-rule constant."""
    if eps == 0.0:
        return 0.0
    return float(2.0 * np.log2(2.0 / eps))


def chain_bounds(rho: DensityMatrix, eps: float, correction=None) -> tuple[float, float]:
    """Two lower bounds on ``H_min^eps(A|B)`` from unconditional quantities.

    bound1: ``H_min^eps(AB) - log2 d_B``.
    bound2: ``H_min^{eps/4}(AB) - H_max^{eps/4}(B) - corr(eps)`` where the
    correction constant is caller-supplied (default
    :func:`default_chain_correction`).
    """
    if len(rho.layout.factors) != 2:
        raise ValueError("chain_bounds expects a two-factor layout [A, B]")
    corr = default_chain_correction if correction is None else correction
    d_b = rho.layout.dims[1]
    b_name = rho.layout.names[1]
    marg_b = rho.marginal(b_name)
    bound1 = h_min_smooth(rho, eps) - float(np.log2(d_b))
    bound2 = h_min_smooth(rho, eps / 4.0) - h_max_smooth(marg_b, eps / 4.0) - corr(eps)
    return bound1, bound2


@dataclass
class SmoothingParams:
    epsilon: float = 0.05
    bisection_tolerance: float = 1e-10
    oracle_grid: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")


@dataclass
class EntropyReport:
    """Entropy bundle for one marginal at one time."""

    h_min: float
    h_max: float
    von_neumann: float
    h_min_smooth: float
    h_max_smooth: float
    epsilon: float
    subject: tuple[str, ...] = field(default_factory=tuple)


def entropy_report(rho: DensityMatrix, eps: float,
                   subject: tuple[str, ...] | None = None) -> EntropyReport:
    lam = spectrum_of(rho)
    return EntropyReport(
        h_min=h_min(lam),
        h_max=h_max(lam),
        von_neumann=von_neumann(lam),
        h_min_smooth=h_min_smooth(lam, eps),
        h_max_smooth=h_max_smooth(lam, eps),
        epsilon=eps,
        subject=tuple(subject) if subject is not None else rho.layout.names,
    )
