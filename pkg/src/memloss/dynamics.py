"""Hamiltonian dynamics, the special states tau/tilde-tau, and the four
entropic memory criteria with dimension certificates and scans."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .entropy import h_max_smooth, h_min_smooth
from .linalg import (
    PAULI,
    DensityMatrix,
    Evolver,
    SubsystemLayout,
    embed_subspace,
    kron,
    trace_distance,
)

MEMORY_LOST = "memory_lost"
MEMORY_RETAINED = "memory_retained"
INCONCLUSIVE = "inconclusive"

_SX, _SZ = PAULI[1], PAULI[3]


@dataclass
class CriterionVerdict:
    """Outcome of one entropic comparison at one time.

    ``margin = rhs - lhs``; the verdict only fires when the conservative
    soundness direction of the smoothed entropies supports it.
    """

    time: float
    lhs: float
    rhs: float
    margin: float
    epsilon: float
    verdict: str
    criterion: str = ""


def _site_op(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for i in range(n):
        out = kron(out, op if i == site else np.eye(2, dtype=complex))
    return out


def _bond_op(op_a, op_b, site: int, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for i in range(n):
        if i == site:
            factor = op_a
        elif i == site + 1:
            factor = op_b
        else:
            factor = np.eye(2, dtype=complex)
        out = kron(out, factor)
    return out


@dataclass(eq=False)
class HamiltonianSpec:
    """Joint Hamiltonian on a two-factor [S, E] layout plus the macroscopic
    subspaces and reference initial states the criteria need.

    ``omega_s`` / ``omega_e`` are isometries (orthonormal columns) into S
    resp. E; ``None`` means the full space.  ``psi_e`` is the environment
    state used by :func:`tau_SE`; ``phi_s`` the system state used by
    :func:`tilde_tau_SE`.
    """

    matrix: np.ndarray
    layout: SubsystemLayout
    omega_s: np.ndarray | None = None
    omega_e: np.ndarray | None = None
    psi_e: np.ndarray | None = None
    phi_s: np.ndarray | None = None
    kind: str = "explicit"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if tuple(self.layout.names) != ("S", "E"):
            raise ValueError("layout must consist of factors ('S', 'E')")
        d = self.layout.dim
        if self.matrix.shape != (d, d):
            raise ValueError("Hamiltonian dimension does not match layout")
        scale = max(1.0, float(np.abs(self.matrix).max(initial=0.0)))
        if np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("Hamiltonian is not Hermitian")
        for attr in ("omega_s", "omega_e"):
            iso = getattr(self, attr)
            if iso is not None:
                iso = np.asarray(iso, dtype=complex)
                if np.abs(iso.conj().T @ iso - np.eye(iso.shape[1])).max() > 1e-9:
                    raise ValueError(f"{attr} columns are not orthonormal")
                setattr(self, attr, iso)
        for attr in ("psi_e", "phi_s"):
            vec = getattr(self, attr)
            if vec is not None:
                vec = np.asarray(vec, dtype=complex).reshape(-1)
                if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
                    raise ValueError(f"{attr} is not normalized")
                setattr(self, attr, vec)

    # -- dimensions ---------------------------------------------------------

    @property
    def d_s(self) -> int:
        return self.layout.dim_of("S")

    @property
    def d_e(self) -> int:
        return self.layout.dim_of("E")

    @property
    def d_omega_s(self) -> int:
        return self.d_s if self.omega_s is None else self.omega_s.shape[1]

    @property
    def d_omega_e(self) -> int:
        return self.d_e if self.omega_e is None else self.omega_e.shape[1]

    @cached_property
    def evolver(self) -> Evolver:
        return Evolver(self.matrix)

    # -- constructors -------------------------------------------------------

    @classmethod
    def explicit(cls, matrix, d_s: int, d_e: int, **kw) -> "HamiltonianSpec":
        layout = SubsystemLayout.of(("S", d_s), ("E", d_e))
        return cls(matrix=matrix, layout=layout, kind="explicit", **kw)

    @classmethod
    def spin_chain(cls, n_sites: int, s_sites, model: str = "tfi",
                   j: float = 1.0, h_field: float = 1.0,
                   bond_couplings=None, **kw) -> "HamiltonianSpec":
        """1-D nearest-neighbor chain with S = a contiguous prefix of sites.

        ``model`` is "tfi" (transverse-field Ising,
        ``-j sum sz sz - h sum sx``) or "heisenberg"
        (``j sum (sx sx + sy sy + sz sz) - h sum sz``); ``bond_couplings``
        optionally scales each of the n-1 bonds (setting the S-E bond to 0
        decouples system and environment).
        """
        sites = sorted(s_sites) if not isinstance(s_sites, int) else list(range(s_sites))
        if sites != list(range(len(sites))) or not sites:
            raise ValueError("S must be a contiguous prefix of chain sites")
        ell = len(sites)
        if not 0 < ell < n_sites:
            raise ValueError("S must be a proper nonempty prefix")
        bonds = np.ones(n_sites - 1) if bond_couplings is None else np.asarray(
            bond_couplings, dtype=float)
        if bonds.shape != (n_sites - 1,):
            raise ValueError("need one coupling per bond")
        dim = 2 ** n_sites
        h = np.zeros((dim, dim), dtype=complex)
        if model == "tfi":
            for b in range(n_sites - 1):
                h -= j * bonds[b] * _bond_op(_SZ, _SZ, b, n_sites)
            for i in range(n_sites):
                h -= h_field * _site_op(_SX, i, n_sites)
        elif model == "heisenberg":
            sy = PAULI[2]
            for b in range(n_sites - 1):
                h += j * bonds[b] * (_bond_op(_SX, _SX, b, n_sites)
                                     + _bond_op(sy, sy, b, n_sites)
                                     + _bond_op(_SZ, _SZ, b, n_sites))
            for i in range(n_sites):
                h -= h_field * _site_op(_SZ, i, n_sites)
        else:
            raise ValueError(f"unknown model {model!r}")
        layout = SubsystemLayout.of(("S", 2 ** ell), ("E", 2 ** (n_sites - ell)))
        meta = {"n_sites": n_sites, "s_sites": ell, "model": model,
                "j": float(j), "h_field": float(h_field),
                "bond_couplings": bonds.tolist(), "boundary_size": 1}
        return cls(matrix=h, layout=layout, kind="spin_chain", meta=meta, **kw)

    @classmethod
    def coupled_product(cls, h_s, h_e, h_int, g: float, **kw) -> "HamiltonianSpec":
        """``H = H_S (x) I + I (x) H_E + g H_int`` on the product space."""
        h_s = np.asarray(h_s, dtype=complex)
        h_e = np.asarray(h_e, dtype=complex)
        h_int = np.asarray(h_int, dtype=complex)
        d_s, d_e = h_s.shape[0], h_e.shape[0]
        h = (kron(h_s, np.eye(d_e)) + kron(np.eye(d_s), h_e) + g * h_int)
        layout = SubsystemLayout.of(("S", d_s), ("E", d_e))
        meta = {"g": g, "h_s": h_s, "h_e": h_e, "h_int": h_int}
        return cls(matrix=h, layout=layout, kind="coupled_product", meta=meta, **kw)


# ---------------------------------------------------------------------------
# The special states.
# ---------------------------------------------------------------------------


def _pi_omega(dim: int, iso: np.ndarray | None) -> np.ndarray:
    if iso is None:
        return np.eye(dim, dtype=complex) / dim
    d_sub = iso.shape[1]
    return embed_subspace(np.eye(d_sub, dtype=complex) / d_sub, iso)


def tau_SE(spec: HamiltonianSpec, t: float) -> DensityMatrix:
    """``U(t) (pi_{Omega_S} (x) |psi><psi|_E) U(t)^dag``."""
    if spec.psi_e is None:
        raise ValueError("spec has no environment state psi_e")
    pi_s = _pi_omega(spec.d_s, spec.omega_s)
    env = np.outer(spec.psi_e, spec.psi_e.conj())
    rho0 = kron(pi_s, env)
    u = spec.evolver.unitary(t)
    return DensityMatrix(u @ rho0 @ u.conj().T, spec.layout)


def tilde_tau_SE(spec: HamiltonianSpec, t: float) -> DensityMatrix:
    """``U(t) (|phi><phi|_S (x) pi_{Omega_E}) U(t)^dag``."""
    if spec.phi_s is None:
        raise ValueError("spec has no system state phi_s")
    sys = np.outer(spec.phi_s, spec.phi_s.conj())
    pi_e = _pi_omega(spec.d_e, spec.omega_e)
    rho0 = kron(sys, pi_e)
    u = spec.evolver.unitary(t)
    return DensityMatrix(u @ rho0 @ u.conj().T, spec.layout)


# ---------------------------------------------------------------------------
# Criteria.
# ---------------------------------------------------------------------------


def system_criteria(spec: HamiltonianSpec, t: float, eps: float = 0.05,
                    slack: float = 0.0) -> tuple[CriterionVerdict, CriterionVerdict]:
    """Memory-of-system-state criteria on ``tau_SE(t)``.

    The first verdict compares ``H_max^eps(S) <~ H_min^eps(E)`` (fires:
    memory lost); the second ``H_min^eps(S) >~ H_max^eps(E)`` (fires:
    memory retained).  Both use the conservative bound directions, so a
    fired verdict is sound.
    """
    tau = tau_SE(spec, t)
    s, e = tau.marginal("S"), tau.marginal("E")
    hmin_s, hmax_s = h_min_smooth(s, eps), h_max_smooth(s, eps)
    hmin_e, hmax_e = h_min_smooth(e, eps), h_max_smooth(e, eps)
    lost = CriterionVerdict(
        time=t, lhs=hmax_s, rhs=hmin_e, margin=hmin_e - hmax_s, epsilon=eps,
        verdict=MEMORY_LOST if hmin_e - hmax_s > slack else INCONCLUSIVE,
        criterion="hmax(S) <~ hmin(E)")
    retained = CriterionVerdict(
        time=t, lhs=hmin_s, rhs=hmax_e, margin=hmax_e - hmin_s, epsilon=eps,
        verdict=MEMORY_RETAINED if hmin_s - hmax_e > slack else INCONCLUSIVE,
        criterion="hmin(S) >~ hmax(E)")
    return lost, retained


def env_criteria(spec: HamiltonianSpec, t: float, eps: float = 0.05,
                 slack: float = 0.0) -> tuple[CriterionVerdict, CriterionVerdict]:
    """Memory-of-environment-microstate criteria on ``tilde_tau_SE(t)``.

    The first verdict compares ``H_min^eps(E) >~ H_max^eps(S)`` (fires:
    output independent of the environment microstate, i.e. that memory is
    lost); the second is the converse (memory retained).
    """
    tau = tilde_tau_SE(spec, t)
    s, e = tau.marginal("S"), tau.marginal("E")
    hmin_s, hmax_s = h_min_smooth(s, eps), h_max_smooth(s, eps)
    hmin_e, hmax_e = h_min_smooth(e, eps), h_max_smooth(e, eps)
    independent = CriterionVerdict(
        time=t, lhs=hmax_s, rhs=hmin_e, margin=hmin_e - hmax_s, epsilon=eps,
        verdict=MEMORY_LOST if hmin_e - hmax_s > slack else INCONCLUSIVE,
        criterion="hmin(E) >~ hmax(S)")
    dependent = CriterionVerdict(
        time=t, lhs=hmin_s, rhs=hmax_e, margin=hmax_e - hmin_s, epsilon=eps,
        verdict=MEMORY_RETAINED if hmin_s - hmax_e > slack else INCONCLUSIVE,
        criterion="hmax(E) <~ hmin(S)")
    return independent, dependent


def dimension_certificates(spec: HamiltonianSpec) -> tuple[bool, bool]:
    """All-times certificates from dimension counting alone.

    system: ``log2 d_{Omega_S} > 2 log2 d_E`` guarantees the
    memory-retained criterion at every time; env: ``log2 d_{Omega_E} >
    2 log2 d_S`` guarantees environment-independence at every time.
    """
    system_cert = np.log2(spec.d_omega_s) > 2.0 * np.log2(spec.d_e)
    env_cert = np.log2(spec.d_omega_e) > 2.0 * np.log2(spec.d_s)
    return bool(system_cert), bool(env_cert)


# ---------------------------------------------------------------------------
# Scans.
# ---------------------------------------------------------------------------


@dataclass
class LightconeScan:
    times: np.ndarray
    h_max_env: np.ndarray          # H_max^eps(E) per time
    deficit_sys: np.ndarray        # log2 d_S - H_min^eps(S) per time
    t_star: float | None           # first time the memory-lost criterion fires
    slope_env: float               # fitted initial growth rate of H_max^eps(E)
    slope_sys: float               # fitted initial growth rate of the S deficit
    epsilon: float


def lightcone_scan(spec: HamiltonianSpec, times, eps: float = 0.05,
                   slack: float = 0.0) -> LightconeScan:
    """Entropy-deficit scan for a nearest-neighbor chain with contiguous S.

    The fitted initial slopes are empirical proxies for the boundary-times-
    velocity growth rate; no formal Lieb-Robinson bound is computed.
    """
    if spec.kind != "spin_chain":
        raise ValueError("lightcone_scan needs a spin-chain spec with contiguous S")
    times = np.asarray(times, dtype=float)
    log_ds = float(np.log2(spec.d_s))
    h_max_env = np.empty_like(times)
    deficit = np.empty_like(times)
    t_star = None
    for i, t in enumerate(times):
        tau = tau_SE(spec, float(t))
        s, e = tau.marginal("S"), tau.marginal("E")
        h_max_env[i] = h_max_smooth(e, eps)
        deficit[i] = log_ds - h_min_smooth(s, eps)
        if t_star is None and h_min_smooth(e, eps) - h_max_smooth(s, eps) > slack:
            t_star = float(t)

    def initial_slope(values):
        # fit over the initial rise, before the curve saturates
        cut = values < 0.5 * max(values.max(), 1e-12)
        k = max(int(cut.sum()), 2)
        coef = np.polyfit(times[:k], values[:k], 1)
        return float(coef[0])

    return LightconeScan(times=times, h_max_env=h_max_env, deficit_sys=deficit,
                         t_star=t_star, slope_env=initial_slope(h_max_env),
                         slope_sys=initial_slope(deficit), epsilon=eps)


# ---------------------------------------------------------------------------
# JSON codec for Hamiltonian specs (the CLI's config format).
# ---------------------------------------------------------------------------


def spec_to_dict(spec: HamiltonianSpec) -> dict:
    from .serialize import encode_complex_matrix, encode_complex_vector

    out: dict = {"kind": spec.kind}
    if spec.kind == "spin_chain":
        m = spec.meta
        out.update(n_sites=m["n_sites"], s_sites=m["s_sites"], model=m["model"],
                   j=m["j"], h_field=m["h_field"],
                   bond_couplings=list(m["bond_couplings"]))
    elif spec.kind == "coupled_product":
        m = spec.meta
        out.update(g=m["g"], h_s=encode_complex_matrix(m["h_s"]),
                   h_e=encode_complex_matrix(m["h_e"]),
                   h_int=encode_complex_matrix(m["h_int"]))
    else:
        out.update(matrix=encode_complex_matrix(spec.matrix),
                   d_s=spec.d_s, d_e=spec.d_e)
    for attr in ("omega_s", "omega_e"):
        iso = getattr(spec, attr)
        if iso is not None:
            out[attr] = encode_complex_matrix(iso)
    for attr in ("psi_e", "phi_s"):
        vec = getattr(spec, attr)
        if vec is not None:
            out[attr] = encode_complex_vector(vec)
    return out


def spec_from_dict(d: dict) -> HamiltonianSpec:
    from .serialize import decode_complex_matrix, decode_complex_vector

    extras = {}
    for attr in ("omega_s", "omega_e"):
        if d.get(attr) is not None:
            extras[attr] = decode_complex_matrix(d[attr])
    for attr in ("psi_e", "phi_s"):
        if d.get(attr) is not None:
            extras[attr] = decode_complex_vector(d[attr])
    kind = d.get("kind", "explicit")
    if kind == "spin_chain":
        return HamiltonianSpec.spin_chain(
            n_sites=int(d["n_sites"]), s_sites=int(d["s_sites"]),
            model=d.get("model", "tfi"), j=float(d.get("j", 1.0)),
            h_field=float(d.get("h_field", 1.0)),
            bond_couplings=d.get("bond_couplings"), **extras)
    if kind == "coupled_product":
        return HamiltonianSpec.coupled_product(
            decode_complex_matrix(d["h_s"]), decode_complex_matrix(d["h_e"]),
            decode_complex_matrix(d["h_int"]), g=float(d["g"]), **extras)
    if kind == "explicit":
        return HamiltonianSpec.explicit(
            decode_complex_matrix(d["matrix"]), int(d["d_s"]), int(d["d_e"]),
            **extras)
    raise ValueError(f"unknown Hamiltonian kind {kind!r}")


@dataclass
class RecurrenceScan:
    t_rec: float | None
    distance_at_rec: float | None
    min_distance: float
    argmin_time: float
    verdict_at_rec: CriterionVerdict | None


def recurrence_scan(spec: HamiltonianSpec, t_max: float, step: float,
                    tol: float = 1e-6, eps: float = 0.05) -> RecurrenceScan:
    """Scan for the first return of ``tau_SE(t)`` to its initial state.

    Absence of a recurrence within the horizon is a valid result
    (``t_rec = None``).  When one is found, the memory-retained verdict at
    that time is attached.
    """
    if spec.layout.dim > 64:
        raise ValueError("recurrence scan limited to total dimension <= 64")
    tau0 = tau_SE(spec, 0.0)
    best, best_t = np.inf, 0.0
    t = step
    while t <= t_max + 1e-12:
        dist = trace_distance(tau_SE(spec, t), tau0)
        if dist < best:
            best, best_t = dist, t
        if dist < tol:
            _, retained = system_criteria(spec, t, eps)
            return RecurrenceScan(t_rec=float(t), distance_at_rec=float(dist),
                                  min_distance=float(best), argmin_time=float(best_t),
                                  verdict_at_rec=retained)
        t += step
    return RecurrenceScan(t_rec=None, distance_at_rec=None,
                          min_distance=float(best), argmin_time=float(best_t),
                          verdict_at_rec=None)
