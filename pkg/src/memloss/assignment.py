"""Product-basis quality of an energy eigenbasis and the no-thermalization
bound it implies.

For a joint Hamiltonian on S (x) E and a system state phi, the overlap
table ``f[k, j] = |<E_k| phi (x) j>|`` measures how close each eigenvector
is to a product state over phi.  The bottleneck score delta(phi) is the
best achievable worst overlap over injective assignments of the d_E product
labels to distinct eigenvectors; above 1/sqrt(2) it caps how far the system
can ever drift from phi when the environment starts maximally mixed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dynamics import HamiltonianSpec, tilde_tau_SE
from .linalg import (
    DensityMatrix,
    fidelity,
    haar_state,
    hermitian_eig,
    kron,
    trace_distance,
)

ORTHONORMAL_TOL = 1e-9


@dataclass
class AssignmentResult:
    delta_phi: float
    assignment: dict[int, int]   # eigenvector index k -> product label j
    overlaps: np.ndarray


def overlap_matrix(eig_vectors, phi, e_basis=None) -> np.ndarray:
    """Overlap table ``f[k, j] = |<E_k| phi (x) e_j>|``.

    ``eig_vectors`` has eigenvectors as columns (d_S d_E of them); ``phi``
    lives on S.  ``e_basis`` defaults to the computational basis of E.
    Columns have squared entries summing to 1 (completeness).
    """
    v = np.asarray(eig_vectors, dtype=complex)
    n = v.shape[0]
    if v.shape != (n, n):
        raise ValueError("eigenvector matrix must be square")
    if np.abs(v.conj().T @ v - np.eye(n)).max(initial=0.0) > ORTHONORMAL_TOL:
        raise ValueError("eigenvectors are not orthonormal")
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(phi) - 1.0) > 1e-9:
        raise ValueError("phi is not normalized")
    d_s = phi.shape[0]
    d_e, rem = divmod(n, d_s)
    if rem:
        raise ValueError("total dimension not divisible by dim(phi)")
    if e_basis is None:
        e_basis = np.eye(d_e, dtype=complex)
    else:
        e_basis = np.asarray(e_basis, dtype=complex)
        if np.abs(e_basis.conj().T @ e_basis - np.eye(d_e)).max() > ORTHONORMAL_TOL:
            raise ValueError("environment basis is not orthonormal")
    # products[:, j] = phi (x) e_j
    products = np.kron(phi[:, None], e_basis)
    return np.abs(v.conj().T @ products)


def _max_matching(adj: np.ndarray) -> dict[int, int] | None:
    """Perfect matching of all columns into distinct rows, or None.

    ``adj[k, j]`` marks an allowed (row, column) pair; Kuhn's augmenting
    path algorithm, deterministic scan order.
    """
    n_rows, n_cols = adj.shape
    row_of = [-1] * n_cols
    col_of = [-1] * n_rows

    def augment(j: int, seen: list[bool]) -> bool:
        for k in range(n_rows):
            if adj[k, j] and not seen[k]:
                seen[k] = True
                if col_of[k] == -1 or augment(col_of[k], seen):
                    col_of[k] = j
                    row_of[j] = k
                    return True
        return False

    for j in range(n_cols):
        if not augment(j, [False] * n_rows):
            return None
    return {row_of[j]: j for j in range(n_cols)}


def delta_phi(overlaps) -> AssignmentResult:
    """Bottleneck assignment: max over injective label->eigenvector maps of
    the minimum overlap along the map.

    Binary search on the sorted overlap values; each feasibility test asks
    for a perfect matching of all columns using only entries >= threshold.
    Eigenvectors left unmatched can be paired with the remaining product
    labels arbitrarily, since the objective only scores the phi-block, so
    the partial matching always extends to a full injection.
    """
    f = np.asarray(overlaps, dtype=float)
    n_rows, n_cols = f.shape
    if n_rows < n_cols:
        raise ValueError("need at least as many eigenvectors as product labels")
    values = np.unique(f)
    # invariant: matching exists at values[lo], does not at values[hi]
    lo, hi = 0, len(values)
    if _max_matching(f >= values[-1]) is not None:
        lo = len(values) - 1
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _max_matching(f >= values[mid]) is not None:
                lo = mid
            else:
                hi = mid
    theta = float(values[lo])
    witness = _max_matching(f >= theta)
    return AssignmentResult(delta_phi=theta, assignment=witness, overlaps=f)


def delta_phi_exhaustive(overlaps) -> float:
    """Brute force over all injective assignments; oracle for small sizes."""
    f = np.asarray(overlaps, dtype=float)
    n_rows, n_cols = f.shape
    best = 0.0
    cols = np.arange(n_cols)
    for rows in itertools.permutations(range(n_rows), n_cols):
        best = max(best, float(f[list(rows), cols].min()))
    return best


def delta_best_match(overlaps) -> float:
    """Per-column best overlap, ignoring injectivity (diagnostic only).

    Upper-bounds :func:`delta_phi`; coincides with it when the columns'
    best rows happen to be distinct.
    """
    f = np.asarray(overlaps, dtype=float)
    return float(f.max(axis=0).min())


def memory_bound(delta: float):
    """All-times trace-distance bound ``4 delta sqrt(1 - delta^2)``.

    The bound is nontrivial (< 2) only for ``delta > 1/sqrt(2)``; the second
    return value flags validity.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must be in [0, 1]")
    bound = float(4.0 * delta * np.sqrt(max(0.0, 1.0 - delta * delta)))
    return bound, bool(delta > 1.0 / np.sqrt(2.0))


def spec_delta_phi(spec: HamiltonianSpec, phi) -> AssignmentResult:
    """delta(phi) of a Hamiltonian spec's eigenbasis."""
    _, v = hermitian_eig(spec.matrix)
    return delta_phi(overlap_matrix(v, phi))


@dataclass
class AbsenceReport:
    delta_phi: float
    bound: float
    bound_valid: bool
    deterministic_max_distance: float
    min_fidelity_margin: float   # min over times of F(tau_S(t), phi) - (2 delta^2 - 1)
    radius: float                # bound + d_S/sqrt(d_E) + d_E^{-1/3}
    mc_exceed_fraction: float
    mc_bound: float              # e^{-d_E^{1/3}/16}
    mc_asserted: bool
    times: list[float]
    seed: int

    def to_json(self) -> str:
        obj = {
            "delta_phi": self.delta_phi,
            "bound": self.bound,
            "bound_valid": self.bound_valid,
            "deterministic_max_distance": self.deterministic_max_distance,
            "min_fidelity_margin": self.min_fidelity_margin,
            "radius": self.radius,
            "mc_exceed_fraction": self.mc_exceed_fraction,
            "mc_bound": self.mc_bound,
            "mc_asserted": self.mc_asserted,
            "times": self.times,
            "seed": self.seed,
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def verify_absence(spec: HamiltonianSpec, phi, times, n_env_samples: int = 20,
                   seed: int = 0) -> AbsenceReport:
    """Check the no-thermalization bound on a concrete Hamiltonian.

    Deterministic part: with the environment maximally mixed, the reduced
    system state never leaves the ``4 delta sqrt(1-delta^2)`` ball around
    phi, and the intermediate fidelity bound ``F >= 2 delta^2 - 1`` holds at
    each sampled time.  Monte-Carlo part: for Haar-random pure environment
    states the excursion radius gains ``d_S/sqrt(d_E) + d_E^{-1/3}``; the
    exceedance probability bound ``e^{-d_E^{1/3}/16}`` is vacuous below
    astronomically large d_E, so the fraction is reported and only asserted
    when the bound is informative.
    """
    if spec.omega_e is not None:
        raise ValueError("analysis assumes the full environment space")
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    result = spec_delta_phi(spec, phi)
    bound, valid = memory_bound(result.delta_phi)
    times = [float(t) for t in times]

    work = HamiltonianSpec(matrix=spec.matrix, layout=spec.layout,
                           omega_s=spec.omega_s, phi_s=phi, kind=spec.kind,
                           meta=dict(spec.meta))
    phi_dm = DensityMatrix.single(np.outer(phi, phi.conj()), "S")
    fid_floor = 2.0 * result.delta_phi ** 2 - 1.0
    max_dist = 0.0
    min_margin = np.inf
    for t in times:
        tau_s = tilde_tau_SE(work, t).marginal("S")
        max_dist = max(max_dist, trace_distance(tau_s, phi_dm))
        min_margin = min(min_margin, fidelity(tau_s, phi_dm) - fid_floor)

    d_s, d_e = spec.d_s, spec.d_e
    radius = bound + d_s / np.sqrt(d_e) + d_e ** (-1.0 / 3.0)
    mc_bound = float(np.exp(-(d_e ** (1.0 / 3.0)) / 16.0))
    evolver = spec.evolver
    exceed = 0
    total = 0
    for i in range(n_env_samples):
        psi = haar_state(d_e, np.random.default_rng([seed, i])).amplitudes
        rho0 = kron(np.outer(phi, phi.conj()), np.outer(psi, psi.conj()))
        for t in times:
            u = evolver.unitary(t)
            joint = DensityMatrix(u @ rho0 @ u.conj().T, spec.layout)
            dist = trace_distance(joint.marginal("S"), phi_dm)
            exceed += dist > radius
            total += 1
    frac = exceed / total if total else 0.0
    return AbsenceReport(delta_phi=result.delta_phi, bound=bound,
                         bound_valid=valid,
                         deterministic_max_distance=float(max_dist),
                         min_fidelity_margin=float(min_margin),
                         radius=float(radius),
                         mc_exceed_fraction=float(frac), mc_bound=mc_bound,
                         mc_asserted=mc_bound < 1.0, times=times, seed=seed)


def coupling_for_delta(make_spec, phi, target: float, g_lo: float,
                       g_hi: float, tol: float = 1e-4,
                       max_iter: int = 60) -> float:
    """Bisect the coupling strength g until delta(phi) hits ``target``.

    ``make_spec(g)`` builds the Hamiltonian; delta is assumed to cross the
    target monotonically between the brackets (checked).
    """

    def delta_at(g: float) -> float:
        return spec_delta_phi(make_spec(g), phi).delta_phi

    d_lo, d_hi = delta_at(g_lo), delta_at(g_hi)
    if not (min(d_lo, d_hi) <= target <= max(d_lo, d_hi)):
        raise ValueError("target delta not bracketed by the couplings")
    sign = 1.0 if d_lo >= d_hi else -1.0
    for _ in range(max_iter):
        mid = 0.5 * (g_lo + g_hi)
        d_mid = delta_at(mid)
        if abs(d_mid - target) <= tol:
            return mid
        if sign * (d_mid - target) > 0:
            g_lo = mid
        else:
            g_hi = mid
    return 0.5 * (g_lo + g_hi)
