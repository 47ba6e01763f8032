"""Quantum channels, Choi states, and the depolarizing threshold analysis."""

from __future__ import annotations

from dataclasses import dataclass
from threading import RLock

import numpy as np

from .entropy import von_neumann
from .linalg import (
    PAULI,
    DensityMatrix,
    PureState,
    SubsystemLayout,
    kron,
    max_entangled,
    partial_trace,
)

KRAUS_TOL = 1e-9


@dataclass(frozen=True)
class Stinespring:
    """Dilation data: environment state, joint unitary on S (x) E, traced factor."""

    env_state: PureState
    joint_unitary: np.ndarray
    traced_factor: str = "E"


@dataclass(frozen=True)
class ChoiState:
    """Choi representation with layout [A', B]; tr_B equals pi_{A'}."""

    state: DensityMatrix
    source: str = ""


class Channel:
    """CPTP map stored as a Kraus list and/or a Stinespring dilation.

    Channels are immutable after construction; derived representations
    (Kraus from Stinespring, the Choi state) are computed lazily and cached
    behind a lock so concurrent readers see a single initialization.
    """

    def __init__(self, input_dim: int, output_dim: int, *,
                 kraus: list[np.ndarray] | None = None,
                 stinespring: Stinespring | None = None,
                 name: str = "", analytic: str | None = None):
        if kraus is None and stinespring is None:
            raise ValueError("channel needs a Kraus list or a Stinespring dilation")
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self.name = name
        self._analytic = analytic
        self._kraus = None
        self._choi = None
        # reentrant: building the Choi state reads the Kraus list under the
        # same lock
        self._lock = RLock()
        if kraus is not None:
            ks = [np.asarray(k, dtype=complex) for k in kraus]
            total = sum(k.conj().T @ k for k in ks)
            if np.abs(total - np.eye(self.input_dim)).max(initial=0.0) > KRAUS_TOL:
                raise ValueError("Kraus operators do not satisfy completeness")
            self._kraus = ks
        self.stinespring = stinespring
        if stinespring is not None:
            u = np.asarray(stinespring.joint_unitary, dtype=complex)
            d = u.shape[0]
            if np.abs(u @ u.conj().T - np.eye(d)).max(initial=0.0) > KRAUS_TOL:
                raise ValueError("Stinespring joint operator is not unitary")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus, name: str = "") -> "Channel":
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        return cls(ks[0].shape[1], ks[0].shape[0], kraus=ks, name=name)

    @classmethod
    def from_stinespring(cls, env_state: PureState, joint_unitary,
                         name: str = "") -> "Channel":
        u = np.asarray(joint_unitary, dtype=complex)
        d_e = env_state.dim
        d_s, rem = divmod(u.shape[0], d_e)
        if rem:
            raise ValueError("joint unitary dimension not divisible by env dim")
        dil = Stinespring(env_state=env_state, joint_unitary=u)
        return cls(d_s, d_s, stinespring=dil, name=name)

    @classmethod
    def identity(cls, d: int) -> "Channel":
        """Identity channel; flagged so large instances can use analytic spectra."""
        return cls(d, d, kraus=[np.eye(d, dtype=complex)], name=f"identity({d})",
                   analytic="identity")

    # -- representations ----------------------------------------------------

    @property
    def kraus(self) -> list[np.ndarray]:
        if self._kraus is None:
            with self._lock:
                if self._kraus is None:
                    self._kraus = self._kraus_from_stinespring()
        return self._kraus

    def _kraus_from_stinespring(self) -> list[np.ndarray]:
        dil = self.stinespring
        d_e = dil.env_state.dim
        d_s = self.input_dim
        u4 = dil.joint_unitary.reshape(d_s, d_e, d_s, d_e)
        psi = dil.env_state.amplitudes
        # K_i[s_out, s_in] = sum_e U[(s_out, i), (s_in, e)] psi[e]
        return [np.tensordot(u4[:, i, :, :], psi, axes=([2], [0]))
                for i in range(d_e)]

    # -- actions ------------------------------------------------------------

    def apply(self, rho) -> np.ndarray:
        """Channel action via the Kraus representation."""
        rho = np.asarray(rho.data if isinstance(rho, DensityMatrix) else rho,
                         dtype=complex)
        if rho.shape != (self.input_dim, self.input_dim):
            raise ValueError("input dimension mismatch")
        out = np.zeros((self.output_dim, self.output_dim), dtype=complex)
        for k in self.kraus:
            out += k @ rho @ k.conj().T
        return out

    def apply_stinespring(self, rho) -> np.ndarray:
        """Channel action through the dilation; agrees with :meth:`apply`."""
        if self.stinespring is None:
            raise ValueError("channel has no Stinespring representation")
        rho = np.asarray(rho.data if isinstance(rho, DensityMatrix) else rho,
                         dtype=complex)
        dil = self.stinespring
        psi = dil.env_state.amplitudes
        joint = kron(rho, np.outer(psi, psi.conj()))
        u = dil.joint_unitary
        evolved = u @ joint @ u.conj().T
        layout = SubsystemLayout.of(("S", self.input_dim), ("E", dil.env_state.dim))
        dm = DensityMatrix(evolved, layout)
        return partial_trace(dm, {"S"}).data

    def dilation_state(self, rho_s) -> DensityMatrix:
        """Joint S (x) E state after the dilation unitary (no partial trace)."""
        if self.stinespring is None:
            raise ValueError("channel has no Stinespring representation")
        rho = np.asarray(rho_s.data if isinstance(rho_s, DensityMatrix) else rho_s,
                         dtype=complex)
        dil = self.stinespring
        psi = dil.env_state.amplitudes
        joint = kron(rho, np.outer(psi, psi.conj()))
        u = dil.joint_unitary
        layout = SubsystemLayout.of(("S", self.input_dim), ("E", dil.env_state.dim))
        return DensityMatrix(u @ joint @ u.conj().T, layout)

    # -- Choi ---------------------------------------------------------------

    def choi(self) -> ChoiState:
        if self._choi is None:
            with self._lock:
                if self._choi is None:
                    self._choi = self._build_choi()
        return self._choi

    def _build_choi(self) -> ChoiState:
        d = self.input_dim
        psi = max_entangled(d, names=("A'", "A"))
        full = psi.density().data
        layout = SubsystemLayout.of(("A'", d), ("B", self.output_dim))
        out = np.zeros((d * self.output_dim,) * 2, dtype=complex)
        eye = np.eye(d, dtype=complex)
        for k in self.kraus:
            op = kron(eye, k)
            out += op @ full @ op.conj().T
        return ChoiState(state=DensityMatrix(out, layout), source=self.name)

    def choi_spectra(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of the Choi state and of its B marginal.

        The identity channel is handled analytically (pure Choi state, flat
        marginal) so that large dimensions stay tractable.
        """
        if self._analytic == "identity":
            d = self.input_dim
            return np.array([1.0]), np.full(d, 1.0 / d)
        choi = self.choi().state
        return choi.spectrum(), choi.marginal("B").spectrum()


def depolarizing(p: float) -> Channel:
    """Qubit depolarizing channel built from its four-level dilation.

    ``|psi>_E = sqrt(1-p)|0> + sum_i sqrt(p/3)|i>`` with the controlled-Pauli
    joint unitary ``U = sum_a sigma_a (x) |a><a|_E``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    amps = np.array([np.sqrt(1.0 - p)] + [np.sqrt(p / 3.0)] * 3, dtype=complex)
    env = PureState.single(amps, "E")
    u = np.zeros((8, 8), dtype=complex)
    u4 = u.reshape(2, 4, 2, 4)
    for a in range(4):
        u4[:, a, :, a] = PAULI[a]
    return Channel.from_stinespring(env, u, name=f"depolarizing({p})")


def iid_threshold(family, lo: float = 0.0, hi: float = 1.0,
                  tol: float = 1e-6) -> float:
    """Root of ``H(S)_tau - H(E)_tau`` over a one-parameter dilation family.

    ``tau_SE`` is the dilated state of the maximally mixed input; the root is
    found by bisection (monotonicity is not assumed).
    """

    def gap(p: float) -> float:
        ch = family(p)
        pi = np.eye(ch.input_dim, dtype=complex) / ch.input_dim
        tau = ch.dilation_state(pi)
        return von_neumann(tau.marginal("S")) - von_neumann(tau.marginal("E"))

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError("entropy gap does not change sign on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0.0:
            return mid
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
