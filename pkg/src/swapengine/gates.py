"""Two-qubit gates for the swap engine and the gate-space work optimizer.

Basis order is {|++>, |+->, |-+>, |-->} with qubit 1 as the left tensor
factor; "+" marks the excited level.  The swap family

    U = diag-block(e^{i phi1}, e^{i phi4}) + off-block(e^{i phi2}, e^{i phi3})

exchanges |+-> and |-+> up to phases; the iSWAP gate is the instance
(0, pi/2, pi/2, 0).  A generic element of U(4) (up to global phase) is
parametrized by 15 angles: three relative diagonal phases times a product of
six two-level Givens rotations, each carrying a mixing angle and a phase.
Mean energetics of a gate acting on the product Gibbs state depend only on
the row-stochastic matrix |U_jk|^2, which is why every member of the swap
family moves the same average energy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .thermo import ConfigError, EngineConfig, MeanEnergetics, Regime, classify_regime, excited_population

log = logging.getLogger(__name__)

# (b1, b2) occupation bits for basis states |++>, |+->, |-+>, |-->
BASIS_BITS = ((1, 1), (1, 0), (0, 1), (0, 0))

_UNITARITY_TOL = 1e-12

# index pairs rotated by the six Givens factors, fixed order
_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class Unitary4:
    """A 4x4 unitary matrix; entries validated to U^dag U = 1 within 1e-12."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(4)))
        if dev > _UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary (max deviation {dev:.3e})")
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True)
class SwapFamily:
    """Phased swap gate: phases phi1, phi4 on |++>,|-->, phi2, phi3 on the swap block."""

    phi1: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0
    phi4: float = 0.0


@dataclass(frozen=True)
class ISwap:
    """The swap-family member with phase i on the swap block."""


@dataclass(frozen=True)
class Generic:
    """15-angle parametrization of U(4) up to global phase.

    angles[0:3] are the relative diagonal phases, angles[3:9] the six Givens
    mixing angles, angles[9:15] the six Givens phases.
    """

    angles: tuple[float, ...] = field(default=(0.0,) * 15)

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.angles)
        if len(a) != 15 or not all(math.isfinite(x) for x in a):
            raise ValueError("Generic gate needs 15 finite angles")
        object.__setattr__(self, "angles", a)


GateSpec = SwapFamily | ISwap | Generic


def _generic_matrix(angles: tuple[float, ...]) -> np.ndarray:
    phases = angles[0:3]
    thetas = angles[3:9]
    lams = angles[9:15]
    m = np.eye(4, dtype=complex)
    for (j, k), th, lam in zip(_PAIRS, thetas, lams):
        c = math.cos(th)
        s = math.sin(th)
        ep = complex(math.cos(lam), math.sin(lam))
        col_j = m[:, j].copy()
        col_k = m[:, k].copy()
        m[:, j] = c * col_j + s * ep.conjugate() * col_k
        m[:, k] = -s * ep * col_j + c * col_k
    d = np.exp(1j * np.array([phases[0], phases[1], phases[2], 0.0]))
    return d[:, None] * m


def build_gate(spec: GateSpec) -> Unitary4:
    """Realize a gate spec as a concrete 4x4 unitary."""
    if isinstance(spec, ISwap):
        spec = SwapFamily(0.0, math.pi / 2, math.pi / 2, 0.0)
    if isinstance(spec, SwapFamily):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = complex(math.cos(spec.phi1), math.sin(spec.phi1))
        m[1, 2] = complex(math.cos(spec.phi2), math.sin(spec.phi2))
        m[2, 1] = complex(math.cos(spec.phi3), math.sin(spec.phi3))
        m[3, 3] = complex(math.cos(spec.phi4), math.sin(spec.phi4))
        return Unitary4(m)
    if isinstance(spec, Generic):
        return Unitary4(_generic_matrix(spec.angles))
    raise TypeError(f"unknown gate spec {spec!r}")


def gibbs_populations(cfg: EngineConfig) -> np.ndarray:
    """Diagonal of the product Gibbs state in the joint basis."""
    f1 = excited_population(cfg.beta1, cfg.omega1)
    f2 = excited_population(cfg.beta2, cfg.omega2)
    return np.array([f1 * f2, f1 * (1 - f2), (1 - f1) * f2, (1 - f1) * (1 - f2)])


def mean_energetics_for_gate(U: Unitary4 | np.ndarray, cfg: EngineConfig) -> MeanEnergetics:
    """Mean per-application energetics of an arbitrary gate from the bi-Gibbs state.

    dE_i = Tr H_i (U rho U^dag - rho) needs only the population transfer
    matrix B = |U|^2: row j of U collects basis state k with weight
    |U_jk|^2, so p'_j = sum_k B_jk p_k.
    """
    if isinstance(U, Unitary4):
        m = U.entries
    else:
        m = Unitary4(np.asarray(U, dtype=complex)).entries
    p = gibbs_populations(cfg)
    b = np.abs(m) ** 2
    dp = b @ p - p
    bits = np.array(BASIS_BITS, dtype=float)
    dE1 = cfg.omega1 * float(bits[:, 0] @ dp)
    dE2 = cfg.omega2 * float(bits[:, 1] @ dp)
    return MeanEnergetics(dE1=dE1, dE2=dE2, w=dE1 + dE2)


@dataclass(frozen=True)
class GateOptimum:
    """Best work output found, the angles realizing it, and the gap to the swap gate."""

    best_w: float
    best_angles: tuple[float, ...]
    gap_to_swap: float


def _work_output_of_angles(angles: np.ndarray, p: np.ndarray,
                           omega1: float, omega2: float) -> float:
    b = np.abs(_generic_matrix(tuple(angles))) ** 2
    dp = b @ p - p
    # work output = -(dE1 + dE2); bits pattern hard-coded for speed
    dE1 = omega1 * (dp[0] + dp[1])
    dE2 = omega2 * (dp[0] + dp[2])
    return -(dE1 + dE2)


def optimize_gate(cfg: EngineConfig, restarts: int = 50, seed: int = 0) -> GateOptimum:
    """Multi-start simplex search for the gate maximizing mean work output.

    Runs `restarts` Nelder-Mead descents from uniform random points in
    [0, 2pi)^15 and keeps the best.  best_w is the work output -<w> of the
    winner; gap_to_swap is the (nonnegative up to 1e-9) amount by which the
    swap gate still beats it.
    """
    if classify_regime(cfg) is not Regime.HEAT_ENGINE:
        raise ConfigError("gate optimization targets heat-engine configurations")
    if restarts < 1:
        raise ConfigError("need at least one restart")
    p = gibbs_populations(cfg)
    # swap exchanges p[1] <-> p[2]; output -<w> = (p[1]-p[2])*(omega1-omega2)
    swap_out = (p[1] - p[2]) * (cfg.omega1 - cfg.omega2)

    def objective(a: np.ndarray) -> float:
        return -_work_output_of_angles(a, p, cfg.omega1, cfg.omega2)

    rng = np.random.default_rng(seed)
    best_val = math.inf
    best_x = None
    for _ in range(restarts):
        x0 = rng.uniform(0.0, 2.0 * math.pi, size=15)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14,
                                "maxfev": 6000, "adaptive": True})
        if res.fun < best_val:
            best_val = res.fun
            best_x = res.x
    best_out = -best_val
    gap = swap_out - best_out
    if gap > 1e-6 and restarts < 20:
        log.warning("gate search stopped %.2e short of the swap value with only "
                    "%d restarts; consider more", gap, restarts)
    return GateOptimum(best_w=best_out,
                       best_angles=tuple(float(v) for v in best_x),
                       gap_to_swap=gap)


def fit_to_matrix(target: np.ndarray, restarts: int = 20, seed: int = 0,
                  ) -> tuple[tuple[float, ...], float]:
    """Fit the 15-angle form to a target unitary, up to global phase.

    Minimizes 8 - 2|Tr(V^dag U)| (zero iff U equals V up to a phase) with
    Nelder-Mead restarts plus a BFGS polish, and returns the best angles with
    the max entrywise distance after phase alignment.
    """
    v = np.asarray(target, dtype=complex)

    def objective(a: np.ndarray) -> float:
        u = _generic_matrix(tuple(a))
        return 8.0 - 2.0 * abs(np.trace(v.conj().T @ u))

    rng = np.random.default_rng(seed)
    best_val = math.inf
    best_x = None
    for _ in range(restarts):
        x0 = rng.uniform(0.0, 2.0 * math.pi, size=15)
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16,
                                "maxfev": 8000, "adaptive": True})
        res = minimize(objective, res.x, method="BFGS",
                       options={"gtol": 1e-12, "maxiter": 500})
        if res.fun < best_val:
            best_val = res.fun
            best_x = res.x
        if best_val < 1e-18:
            break
    u = _generic_matrix(tuple(best_x))
    tr = np.trace(v.conj().T @ u)
    u_aligned = u * np.exp(-1j * np.angle(tr))
    dist = float(np.max(np.abs(u_aligned - v)))
    return tuple(float(x) for x in best_x), dist
