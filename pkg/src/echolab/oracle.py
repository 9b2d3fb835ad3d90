"""Exact brute-force oracle for the multi-round echo at small Majorana count.

Everything here works in the full 2^(N/2)-dimensional Hilbert space:
Majorana operators from a Jordan-Wigner chain ({chi_a, chi_b} = delta_ab,
so chi^2 = 1/2), quartic couplings drawn per realization, Lindblad
superoperators in row-major vectorization, and the echo evaluated
literally as tr[O Phi^n[O]] / tr[O^2] with O = i chi_1 chi_2.

Incoherent errors use jump operators sqrt(3V/N^3) chi_a chi_b chi_c chi_d
over all index quadruples, present in both the forward and the backward
superoperator.  Coherent errors Trotterize a Brownian quartic perturbation
of the backward Hamiltonian, reusing the identical noise trajectory in
every round (that reuse is what makes the error coherent).

Disorder averaging: F itself is averaged over realizations (and noise
trajectories); ratios such as (1-F_n)/(1-F_1) are formed from the
averaged echoes.  Realization seeds derive deterministically from the
master seed, and averages reduce in fixed order, so results are
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .errors import DomainError, OracleError

N_MAX = 12
SUPEROP_DIM_CAP = 4096


@dataclass(frozen=True)
class MajoranaSet:
    N: int
    dim: int
    ops: np.ndarray            # (N, dim, dim) complex

    def operator(self, a: int) -> np.ndarray:
        return self.ops[a]


@dataclass
class EchoSample:
    n: int
    t: float
    mode: str
    F: float
    n_realizations: int
    stderr: float


def build_majoranas(N: int) -> MajoranaSet:
    """Jordan-Wigner Majoranas normalized to {chi_a, chi_b} = delta_ab."""
    if N % 2 != 0 or not 2 <= N <= N_MAX:
        raise DomainError(f"N must be even with 2 <= N <= {N_MAX}, got {N}")
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    nq = N // 2
    dim = 2 ** nq
    ops = np.empty((N, dim, dim), dtype=complex)
    for j in range(nq):
        left = np.eye(1, dtype=complex)
        for _ in range(j):
            left = np.kron(left, sz)
        right = np.eye(2 ** (nq - j - 1), dtype=complex)
        ops[2 * j] = np.kron(np.kron(left, sx), right) / math.sqrt(2.0)
        ops[2 * j + 1] = np.kron(np.kron(left, sy), right) / math.sqrt(2.0)
    return MajoranaSet(N=N, dim=dim, ops=ops)


def quadruple_operators(ms: MajoranaSet):
    """All chi_a chi_b chi_c chi_d with a<b<c<d, stacked as (K, dim, dim)."""
    quads = list(combinations(range(ms.N), 4))
    mats = np.empty((len(quads), ms.dim, ms.dim), dtype=complex)
    for k, (a, b, c, d) in enumerate(quads):
        mats[k] = ms.ops[a] @ ms.ops[b] @ ms.ops[c] @ ms.ops[d]
    return quads, mats


def probe_operator(ms: MajoranaSet) -> np.ndarray:
    """O = i chi_1 chi_2 (Hermitian, O^2 = identity/4)."""
    return 1j * ms.ops[0] @ ms.ops[1]


def coupling_scale(N: int, J: float) -> float:
    """Std dev of one quartic coupling, variance 3! J^2 / N^3."""
    return math.sqrt(6.0 * J * J / N ** 3)


def sample_hamiltonian(ms: MajoranaSet, J: float, rng) -> np.ndarray:
    """One disorder realization of the quartic all-to-all Hamiltonian."""
    if ms.N < 4:
        raise DomainError("the quartic Hamiltonian needs N >= 4")
    quads, mats = quadruple_operators(ms)
    draws = rng.normal(0.0, coupling_scale(ms.N, J), size=len(quads))
    H = np.tensordot(draws, mats, axes=(0, 0))
    return 0.5 * (H + H.conj().T)   # clean rounding; H is Hermitian already


def jump_operators(ms: MajoranaSet, V: float) -> np.ndarray:
    """Jump set sqrt(3V/N^3) chi_a chi_b chi_c chi_d over all quadruples."""
    _, mats = quadruple_operators(ms)
    return math.sqrt(3.0 * V / ms.N ** 3) * mats


def lindblad_superoperator(H: np.ndarray, jumps, sign: int = +1) -> np.ndarray:
    """Row-major vectorized generator of rho -> -i[sign*H, rho] + dissipator.

    With vec(rho) = rho.reshape(-1), rho -> A rho B maps to kron(A, B.T).
    """
    d = H.shape[0]
    if d * d > SUPEROP_DIM_CAP ** 2:
        raise OracleError(f"superoperator dimension {d * d} exceeds cap")
    if sign not in (+1, -1):
        raise DomainError("sign must be +1 or -1")
    eye = np.eye(d, dtype=complex)
    L_op = -1j * sign * (np.kron(H, eye) - np.kron(eye, H.T))
    for L in jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        L_op += np.kron(L, Ld.T)
        L_op -= 0.5 * np.kron(LdL, eye)
        L_op -= 0.5 * np.kron(eye, LdL.T)
    return L_op


def _expm_hermitian_factor(H: np.ndarray, scale: float):
    """Return U = exp(1j * scale * H) via eigendecomposition."""
    vals, vecs = np.linalg.eigh(H)
    return (vecs * np.exp(1j * scale * vals)) @ vecs.conj().T


def _brownian_step_scale(N: int, V: float, dt_T: float) -> float:
    """Std dev of a per-step Brownian coupling rate, variance 3!V/(N^3 dt)."""
    return math.sqrt(6.0 * V / (N ** 3 * dt_T))


def _backward_unitary(ms, H, V, t, dt_T, rng, quad_mats):
    """Time-ordered exp(+i Integral (H + dH(s)) ds) with per-step noise."""
    steps = max(1, int(round(t / dt_T)))
    dt = t / steps
    U = np.eye(ms.dim, dtype=complex)
    scale = _brownian_step_scale(ms.N, V, dt)
    for _ in range(steps):
        draws = rng.normal(0.0, scale, size=quad_mats.shape[0])
        dH = np.tensordot(draws, quad_mats, axes=(0, 0))
        U = _expm_hermitian_factor(H + dH, dt) @ U   # later steps act later
    return U


def _echo_set_incoherent(ms, H, V, t, n_max):
    """F_1..F_n from one disorder realization, incoherent errors."""
    jumps = jump_operators(ms, V)
    E_f = scipy.linalg.expm(lindblad_superoperator(H, jumps, +1) * t)
    E_b = scipy.linalg.expm(lindblad_superoperator(-H, jumps, +1) * t)
    phi = E_b @ E_f
    O = probe_operator(ms)
    norm = float(np.trace(O @ O).real)
    v = O.reshape(-1).astype(complex)
    out = np.empty(n_max, dtype=complex)
    for k in range(n_max):
        v = phi @ v
        out[k] = np.vdot(O.reshape(-1), v) / norm
    return out


def _echo_set_coherent(ms, H, V, t, n_max, dt_T, rng, quad_mats):
    """F_1..F_n from one disorder realization and one noise trajectory."""
    U_f = _expm_hermitian_factor(H, -t)
    U_b = _backward_unitary(ms, H, V, t, dt_T, rng, quad_mats)
    W = U_b @ U_f
    O = probe_operator(ms)
    norm = float(np.trace(O @ O).real)
    out = np.empty(n_max, dtype=complex)
    On = O
    for k in range(n_max):
        On = W @ On @ W.conj().T
        out[k] = np.trace(O @ On) / norm
    return out


def _echo_set_both(ms, H, V, t, n_max, dt_T, rng, quad_mats):
    """Lindblad jumps plus a reused Brownian trajectory in the backward leg."""
    jumps = jump_operators(ms, V)
    E_f = scipy.linalg.expm(lindblad_superoperator(H, jumps, +1) * t)
    steps = max(1, int(round(t / dt_T)))
    dt = t / steps
    diss_half = scipy.linalg.expm(
        (lindblad_superoperator(np.zeros_like(H), jumps, +1)) * (dt / 2.0))
    scale = _brownian_step_scale(ms.N, V, dt)
    d = ms.dim
    step_unitaries = []
    for _ in range(steps):
        draws = rng.normal(0.0, scale, size=quad_mats.shape[0])
        dH = np.tensordot(draws, quad_mats, axes=(0, 0))
        step_unitaries.append(_expm_hermitian_factor(-(H + dH), -dt))

    def backward_apply(vec):
        rho = vec.reshape(d, d)
        for U in step_unitaries:   # same trajectory every round
            rho = (diss_half @ rho.reshape(-1)).reshape(d, d)
            rho = U @ rho @ U.conj().T
            rho = (diss_half @ rho.reshape(-1)).reshape(d, d)
        return rho.reshape(-1)

    O = probe_operator(ms)
    norm = float(np.trace(O @ O).real)
    v = O.reshape(-1).astype(complex)
    out = np.empty(n_max, dtype=complex)
    for k in range(n_max):
        v = backward_apply(E_f @ v)
        out[k] = np.vdot(O.reshape(-1), v) / norm
    return out


def echo_ed_curve(ms: MajoranaSet, J: float, V: float, mode: str, t: float,
                  n_list, seed=0, n_realizations=50, n_trajectories=20,
                  dt_trotter=0.01):
    """Averaged F_n for every n in n_list, sharing realizations across n.

    Returns {n: EchoSample}.  Sharing both the disorder and noise draws
    across round numbers makes ratio diagnostics far less noisy.
    """
    if mode not in ("incoherent", "coherent", "both", "none"):
        raise DomainError(f"unknown mode {mode!r}")
    n_list = sorted(int(n) for n in n_list)
    if n_list[0] < 1:
        raise DomainError("round numbers must be >= 1")
    if t < 0:
        raise DomainError("t must be nonnegative")
    n_max = n_list[-1]
    if t == 0 or mode == "none" or V == 0.0:
        # forward and backward evolutions cancel exactly
        return {n: EchoSample(n=n, t=t, mode=mode, F=1.0,
                              n_realizations=0, stderr=0.0)
                for n in n_list}

    master = np.random.SeedSequence(seed)
    realization_seeds = master.spawn(n_realizations)
    quads_cache = quadruple_operators(ms)[1] if mode in ("coherent", "both") else None

    samples = []   # rows of F_1..F_{n_max} per elementary realization
    for r in range(n_realizations):
        ss = realization_seeds[r]
        rng_H = np.random.default_rng(ss)
        H = sample_hamiltonian(ms, J, rng_H)
        if mode == "incoherent":
            samples.append(_echo_set_incoherent(ms, H, V, t, n_max))
        else:
            traj_seeds = ss.spawn(n_trajectories)
            for w in range(n_trajectories):
                rng_V = np.random.default_rng(traj_seeds[w])
                if mode == "coherent":
                    samples.append(_echo_set_coherent(
                        ms, H, V, t, n_max, dt_trotter, rng_V, quads_cache))
                else:
                    samples.append(_echo_set_both(
                        ms, H, V, t, n_max, dt_trotter, rng_V, quads_cache))

    stacked = np.array(samples)                      # (R, n_max) complex
    mean = stacked.mean(axis=0)
    if np.max(np.abs(mean.imag)) > 1e-10:
        raise OracleError(
            f"echo has imaginary part {np.max(np.abs(mean.imag)):.3e} > 1e-10")
    mean_re = mean.real
    if np.max(np.abs(mean_re)) > 1.0 + 1e-6:
        raise OracleError(f"nonphysical |F| = {np.max(np.abs(mean_re)):.8f} > 1")
    count = stacked.shape[0]
    sem = stacked.real.std(axis=0, ddof=1) / math.sqrt(count) if count > 1 \
        else np.zeros(n_max)
    return {n: EchoSample(n=n, t=t, mode=mode, F=float(mean_re[n - 1]),
                          n_realizations=count, stderr=float(sem[n - 1]))
            for n in n_list}


def multi_round_echo_ed(ms: MajoranaSet, J: float, V: float, mode: str,
                        n: int, t: float, seed=0, n_realizations=50,
                        n_trajectories=20, dt_trotter=0.01) -> EchoSample:
    """Averaged n-round echo; see echo_ed_curve for the batch variant."""
    return echo_ed_curve(ms, J, V, mode, t, [n], seed=seed,
                         n_realizations=n_realizations,
                         n_trajectories=n_trajectories,
                         dt_trotter=dt_trotter)[int(n)]


def perturbative_deficit(ms: MajoranaSet, H: np.ndarray, V: float, t: float,
                         n_quad: int = 81) -> float:
    """Second-order echo deficit 1 - F_1 from the error-free OTOC integrals.

    Works for either error class: with this jump choice the incoherent
    integrand 2 sum_k <O L_k(s) [L_k(s), O]> and the noise-averaged
    coherent one coincide.  Operators evolve under the error-free H;
    the result is normalized by tr[O^2].
    """
    if n_quad < 5 or n_quad % 2 == 0:
        raise DomainError("n_quad must be an odd integer >= 5 (Simpson rule)")
    from scipy.integrate import simpson

    _, mats = quadruple_operators(ms)
    O = probe_operator(ms)
    norm = float(np.trace(O @ O).real)
    vals, vecs = np.linalg.eigh(H)
    times = np.linspace(0.0, t, n_quad)
    c_kk = float(sum(np.trace(O @ Q @ Q @ O).real for Q in mats))
    integrand = np.empty(n_quad)
    for idx, s in enumerate(times):
        U = (vecs * np.exp(1j * vals * s)) @ vecs.conj().T
        Ud = U.conj().T
        acc = 0.0
        for Q in mats:
            Qt = U @ Q @ Ud
            acc += float(np.trace(O @ Qt @ O @ Qt).real)
        integrand[idx] = c_kk - acc
    integral = float(simpson(integrand, x=times))
    return 2.0 * (3.0 * V / ms.N ** 3) * integral / norm


@dataclass
class ScalingReport:
    n_list: list
    deficits: dict           # n -> 1 - F_n (averaged echoes)
    ratios: dict             # n -> (1 - F_n)/(1 - F_1)
    A: float                 # linear-in-n coefficient of 1-F ~ 2nA + n^2 B
    B: float                 # quadratic coefficient
    ill_conditioned: bool
    samples: dict            # n -> EchoSample


def scaling_ratio_test(ms: MajoranaSet, J: float, V: float, mode: str,
                       t_small: float, n_list, seed=0, n_realizations=50,
                       n_trajectories=20, dt_trotter=0.01) -> ScalingReport:
    """Fit 1 - F_n to 2nA + n^2 B and report per-n accumulation ratios.

    Ratios are of averaged echoes (average first, divide second).  The
    ill-conditioned flag trips when every echo is indistinguishable from 1.
    """
    n_list = sorted(int(n) for n in set(n_list) | {1})
    samples = echo_ed_curve(ms, J, V, mode, t_small, n_list, seed=seed,
                            n_realizations=n_realizations,
                            n_trajectories=n_trajectories,
                            dt_trotter=dt_trotter)
    deficits = {n: 1.0 - samples[n].F for n in n_list}
    ill = max(abs(d) for d in deficits.values()) < 1e-9
    if ill:
        A = B = 0.0
        ratios = {n: float("nan") for n in n_list}
    else:
        design = np.array([[2.0 * n, float(n * n)] for n in n_list])
        rhs = np.array([deficits[n] for n in n_list])
        coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
        A, B = float(coef[0]), float(coef[1])
        d1 = deficits[1]
        ratios = {n: deficits[n] / d1 for n in n_list}
    return ScalingReport(n_list=n_list, deficits=deficits, ratios=ratios,
                         A=A, B=B, ill_conditioned=ill, samples=samples)
