"""Quantum-jump simulation of the pulsed two-qubit engine.

A run alternates instantaneous two-qubit gate pulses (at t = k*tau2 for
k = 0..N-1) with relaxation intervals of length tau2, starting from a
product-Gibbs eigenstate and ending with a projective energy measurement at
T = N*tau2.  Between pulses each qubit couples only to its own bath.  The
unraveling follows the waiting-time construction on the joint four-state
space: the no-jump generator is diagonal in the energy basis, so the squared
norm decays as a known mixture of exponentials, the next jump time solves
survival(t) = r for uniform r, and the jump channel (emission or absorption
in bath 1 or 2) is drawn proportionally to the instantaneous channel rates
gamma*(n_i+1)*||sigma_i psi||^2 and gamma*n_i*||sigma_i^dag psi||^2.  For
basis states this collapses to a classical two-state process with dichotomic
rates gamma*(n_i+1) (emission, active when excited) and gamma*n_i
(absorption, active when ground).

Three engines realize the same trajectory law:

  "mcwf"    amplitude evolution with root-found jump times; the oracle, and
            the only engine that can follow superpositions (Generic gates);
  "events"  the eigenstate shortcut with closed-form exponential waiting
            times, emitting the full time-stamped event record;
  "bits"    vectorized sampling of the occupation bits at interval
            boundaries from the exact two-state propagator; reproduces the
            exact joint law of the whole integer ledger but carries no event
            times; default for large swap-family ensembles.

Every engine derives trajectory k's random stream from (seed, stream index)
with a counter-based generator, so record k is independent of the sample
size and reruns are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .gates import BASIS_BITS, GateSpec, Generic, ISwap, SwapFamily, Unitary4, build_gate, gibbs_populations
from .thermo import ConfigError, EngineConfig, bose_occupation, excited_population

BASIS_LABELS = ("++", "+-", "-+", "--")

# jump channel order: (bath 1 emission, bath 1 absorption, bath 2 emission, bath 2 absorption)
CHANNELS = ((1, "E"), (1, "A"), (2, "E"), (2, "A"))

# basis-index maps of the four jump operators, -1 where the operator annihilates
_JUMP_MAPS = (
    (2, 3, -1, -1),   # sigma_1:      |+ b2> -> |- b2>
    (-1, -1, 0, 1),   # sigma_1^dag:  |- b2> -> |+ b2>
    (1, -1, 3, -1),   # sigma_2:      |b1 +> -> |b1 ->
    (-1, 0, -1, 2),   # sigma_2^dag:  |b1 -> -> |b1 +>
)

_TIME_RTOL = 1e-12   # relative tolerance of the jump-time root find


@dataclass(frozen=True)
class Protocol:
    """Pulse schedule: n_pulses gate applications spaced tau2 apart.

    n_pulses = 0 is the pulse-free diagnostic: a single relaxation interval
    of length tau2 with no gate, so total_time degenerates to tau2.
    """

    n_pulses: int
    tau2: float

    def __post_init__(self) -> None:
        if not (isinstance(self.n_pulses, int) and self.n_pulses >= 0):
            raise ConfigError(f"n_pulses must be a nonnegative integer, got {self.n_pulses!r}")
        if not (isinstance(self.tau2, (int, float)) and math.isfinite(self.tau2) and self.tau2 > 0):
            raise ConfigError(f"tau2 must be a finite positive time, got {self.tau2!r}")

    @property
    def total_time(self) -> float:
        return self.n_pulses * self.tau2 if self.n_pulses else self.tau2


@dataclass(frozen=True)
class JointState:
    """Pure state of the qubit pair: 4 amplitudes over {|++>,|+->,|-+>,|-->}."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {a.shape}")
        object.__setattr__(self, "amplitudes", a)

    @property
    def basis_index(self) -> int | None:
        """Index of the occupied basis state, or None for a superposition."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > 1e-12)
        return int(nz[0]) if len(nz) == 1 else None


def basis_state(index: int) -> JointState:
    a = np.zeros(4, dtype=complex)
    a[index] = 1.0
    return JointState(a)


@dataclass(frozen=True, slots=True)
class TrajectoryEvent:
    """One record line: a jump ("E"/"A" with bath 1|2) or a pulse ("P" with index).

    quantum is the bath level spacing for jumps and 0 for pulses; the sign of
    the heat contribution comes from the kind (emission releases +quantum
    into the bath, absorption takes -quantum from it).
    """

    time: float
    kind: str
    bath: int = 0
    index: int = -1
    quantum: float = 0.0


class RunParams(NamedTuple):
    """Fingerprint shared by all records of one homogeneous ensemble."""

    beta1: float
    beta2: float
    omega1: float
    omega2: float
    gamma: float
    n_pulses: int
    tau2: float
    gate: str


@dataclass(frozen=True, slots=True)
class TrajectoryRecord:
    """Outcome of one run: integer ledger plus single-rounded energies.

    h_i is the net emission count of bath i (emissions minus absorptions),
    db_i the final minus initial occupation bit of qubit i, and n_w the
    summed per-pulse excitation transfer into qubit 1 (defined for
    swap-family runs only; each pulse moves b2 - b1 quanta).  The exact
    ledger identities are n_w = h1 + db1 = -(h2 + db2).

    The integers are ground truth; every derived energy is one correctly
    rounded product of a level spacing with an exact integer, never a chain
    of rounded intermediates.  In omega1-units this makes the swap-run
    identities dE2 == -(omega2/omega1)*dE1 and w/dE1 == (omega1-omega2)/omega1
    literal float equalities (the latter verified for |n_w| < 1.19e5), and w
    sits exactly on the work lattice: round(w/(omega1-omega2)) recovers n_w
    and remultiplies to w bit for bit (bare division may round one ulp off
    the integer).  dE_i = q_i + dU_i, w = dE1 + dE2 and
    w = q1 + q2 + dU1 + dU2 hold exactly on the ledger itself.

    events is the time-ordered pulse/jump list when the engine resolves it,
    None otherwise; initial/final states are basis labels with their weights
    under the initial product-Gibbs distribution (the two-measurement
    boundary factors).
    """

    params: RunParams
    initial_state: str
    final_state: str
    p_initial: float
    p_final: float
    h1: int
    h2: int
    db1: int
    db2: int
    n_w: int | None
    events: tuple[TrajectoryEvent, ...] | None = None

    @property
    def q1(self) -> float:
        """Heat released into reservoir 1 (emissions count positive)."""
        return self.params.omega1 * self.h1

    @property
    def q2(self) -> float:
        return self.params.omega2 * self.h2

    @property
    def dU1(self) -> float:
        """Energy change of working qubit 1 between the boundary measurements."""
        return self.params.omega1 * self.db1

    @property
    def dU2(self) -> float:
        return self.params.omega2 * self.db2

    @property
    def dE1(self) -> float:
        """Total energy handed to subsystem 1 (qubit plus bath)."""
        return self.params.omega1 * (self.h1 + self.db1)

    @property
    def dE2(self) -> float:
        return self.params.omega2 * (self.h2 + self.db2)

    @property
    def w(self) -> float:
        """Work injected by the drive; (omega1-omega2)*n_w for swap runs."""
        if self.n_w is not None:
            return (self.params.omega1 - self.params.omega2) * self.n_w
        return self.dE1 + self.dE2

    def validate(self) -> None:
        """Assert the integer ledger and, when events exist, their bookkeeping."""
        if abs(self.db1) > 1 or abs(self.db2) > 1:
            raise AssertionError("occupation bits moved by more than one level")
        if self.n_w is not None:
            if self.n_w != self.h1 + self.db1 or self.n_w != -(self.h2 + self.db2):
                raise AssertionError(
                    f"ledger mismatch: n_w={self.n_w}, h1+db1={self.h1 + self.db1}, "
                    f"-(h2+db2)={-(self.h2 + self.db2)}")
        if self.events is not None:
            counts = {(1, "E"): 0, (1, "A"): 0, (2, "E"): 0, (2, "A"): 0}
            last = -math.inf
            for ev in self.events:
                if ev.time <= last:
                    raise AssertionError("event times not strictly increasing")
                last = ev.time
                if ev.kind in ("E", "A"):
                    counts[(ev.bath, ev.kind)] += 1
            if counts[(1, "E")] - counts[(1, "A")] != self.h1 \
                    or counts[(2, "E")] - counts[(2, "A")] != self.h2:
                raise AssertionError("event counts disagree with the net ledger")


def _dichotomic_rates(cfg: EngineConfig) -> tuple[float, float, float, float]:
    """(emission1, absorption1, emission2, absorption2) eigenstate rates."""
    n1 = bose_occupation(cfg.beta1, cfg.omega1)
    n2 = bose_occupation(cfg.beta2, cfg.omega2)
    g = cfg.gamma
    return g * (n1 + 1.0), g * n1, g * (n2 + 1.0), g * n2


def jump_rates(state: JointState, cfg: EngineConfig) -> np.ndarray:
    """Instantaneous rates of the four jump channels for a normalized state.

    Channel order follows CHANNELS; for a basis state exactly two channels
    are active (the emission channel of an excited qubit, the absorption
    channel of a ground one) with the dichotomic rates.
    """
    em1, ab1, em2, ab2 = _dichotomic_rates(cfg)
    pops = np.abs(state.amplitudes) ** 2
    p1 = pops[0] + pops[1]     # qubit 1 excited weight
    p2 = pops[0] + pops[2]
    return np.array([em1 * p1, ab1 * (1.0 - p1), em2 * p2, ab2 * (1.0 - p2)])


def sample_initial_state(cfg: EngineConfig, rng: np.random.Generator) -> int:
    """Draw a joint basis index from the product Gibbs distribution."""
    b1 = rng.random() < excited_population(cfg.beta1, cfg.omega1)
    b2 = rng.random() < excited_population(cfg.beta2, cfg.omega2)
    return 3 - 2 * int(b1) - int(b2)


def _decay_constants(cfg: EngineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-basis-state total outflow rate and coherent phase frequency."""
    em1, ab1, em2, ab2 = _dichotomic_rates(cfg)
    bits = np.array(BASIS_BITS, dtype=float)
    gtot = (em1 * bits[:, 0] + ab1 * (1.0 - bits[:, 0])
            + em2 * bits[:, 1] + ab2 * (1.0 - bits[:, 1]))
    energy = cfg.omega1 * (bits[:, 0] - 0.5) + cfg.omega2 * (bits[:, 1] - 0.5)
    return gtot, energy


def evolve_between_pulses(
    state: JointState,
    duration: float,
    cfg: EngineConfig,
    rng: np.random.Generator,
    t_start: float = 0.0,
    eigenstate_shortcut: bool = True,
) -> tuple[JointState, list[TrajectoryEvent]]:
    """Relax the joint state for `duration` against the two baths.

    Standard waiting-time unraveling: draw r uniform, decay the amplitudes
    under the diagonal no-jump generator until the squared norm hits r (the
    root is bisected to 1e-12 relative time tolerance; for a basis state the
    closed form -ln(r)/rate is used instead unless eigenstate_shortcut is
    off), apply the channel drawn from the instantaneous rates, renormalize,
    repeat until the interval is exhausted.  Returned event times are
    absolute (offset by t_start).
    """
    if duration < 0:
        raise ConfigError(f"duration must be nonnegative, got {duration}")
    gtot, energy = _decay_constants(cfg)
    em1, ab1, em2, ab2 = _dichotomic_rates(cfg)
    rates_vec = np.array([em1, ab1, em2, ab2])
    amps = np.array(state.amplitudes, dtype=complex)
    events: list[TrajectoryEvent] = []
    t = 0.0
    while True:
        rem = duration - t
        if rem <= 0:
            break
        pops = np.abs(amps) ** 2
        pops = pops / pops.sum()
        idx = int(np.argmax(pops)) if np.count_nonzero(pops > 1e-24) == 1 else None
        r = rng.random()
        if idx is not None and eigenstate_shortcut:
            # single occupied basis state: survival is a pure exponential
            wait = math.inf if gtot[idx] == 0.0 else -math.log(r) / gtot[idx]
            if wait > rem:
                amps = np.zeros(4, dtype=complex)
                amps[idx] = 1.0
                break
            t_jump = wait
        else:
            surv_end = float(pops @ np.exp(-gtot * rem))
            if surv_end > r:
                amps = amps * np.exp((-1j * energy - 0.5 * gtot) * rem)
                amps = amps / np.linalg.norm(amps)
                break
            lo, hi = 0.0, rem
            # survival is strictly decreasing from 1, so the root is bracketed
            while hi - lo > _TIME_RTOL * max(hi, 1e-300):
                mid = 0.5 * (lo + hi)
                if float(pops @ np.exp(-gtot * mid)) > r:
                    lo = mid
                else:
                    hi = mid
            t_jump = 0.5 * (lo + hi)
        amps = amps * np.exp((-1j * energy - 0.5 * gtot) * t_jump)
        nrm = np.linalg.norm(amps)
        if nrm == 0.0:
            raise AssertionError("state annihilated before jump: rate bookkeeping broken")
        amps = amps / nrm
        pops = np.abs(amps) ** 2
        p1 = pops[0] + pops[1]
        p2 = pops[0] + pops[2]
        weights = rates_vec * np.array([p1, 1.0 - p1, p2, 1.0 - p2])
        wsum = weights.sum()
        u = rng.random() * wsum
        ch = 0
        acc = weights[0]
        while acc < u and ch < 3:
            ch += 1
            acc += weights[ch]
        # apply the jump operator: project onto the active sector, relabel
        new = np.zeros(4, dtype=complex)
        for src, dst in enumerate(_JUMP_MAPS[ch]):
            if dst >= 0:
                new[dst] = amps[src]
        nrm = np.linalg.norm(new)
        amps = new / nrm
        t += t_jump
        bath, kind = CHANNELS[ch]
        quantum = cfg.omega1 if bath == 1 else cfg.omega2
        events.append(TrajectoryEvent(time=t_start + t, kind=kind, bath=bath,
                                      quantum=quantum))
    return JointState(amps), events


@dataclass(frozen=True)
class PulseEffect:
    """Per-pulse energetics, defined when both endpoint states are eigenstates."""

    dE1: float
    dE2: float
    w: float
    transfer: int   # quanta moved into qubit 1 (b1_after - b1_before)


def apply_pulse(
    state: JointState, gate: Unitary4, cfg: EngineConfig,
) -> tuple[JointState, PulseEffect | None]:
    """Apply an instantaneous gate; report per-pulse energetics when defined.

    For swap-family gates basis states map to basis states, so the pulse
    energy is a read-off (transfer quanta = change of qubit 1's bit).  When
    either endpoint is a superposition no per-pulse energy is assigned.
    """
    amps = gate.entries @ state.amplitudes
    new = JointState(amps)
    i = state.basis_index
    j = new.basis_index
    if i is None or j is None:
        return new, None
    m = BASIS_BITS[j][0] - BASIS_BITS[i][0]
    m2 = BASIS_BITS[j][1] - BASIS_BITS[i][1]
    dE1 = cfg.omega1 * m
    dE2 = cfg.omega2 * m2
    return new, PulseEffect(dE1=dE1, dE2=dE2, w=dE1 + dE2, transfer=m)


def _gate_tag(spec: GateSpec) -> str:
    return repr(spec)


def _is_swaplike(spec: GateSpec) -> bool:
    return isinstance(spec, (SwapFamily, ISwap))


def run_trajectory(
    cfg: EngineConfig,
    protocol: Protocol,
    gate_spec: GateSpec,
    rng: np.random.Generator,
    keep_events: bool = True,
    eigenstate_shortcut: bool = True,
) -> TrajectoryRecord:
    """Simulate one full run and assemble its record.

    Samples the initial eigenstate, alternates pulse and relaxation interval
    n_pulses times (a single bare interval when n_pulses = 0), measures the
    final energy eigenstate (a read-off for basis states, a Born draw
    otherwise), and fills the integer ledger.
    """
    gate = build_gate(gate_spec)
    swaplike = _is_swaplike(gate_spec)
    pops0 = gibbs_populations(cfg)
    idx0 = sample_initial_state(cfg, rng)
    state = basis_state(idx0)
    params = RunParams(cfg.beta1, cfg.beta2, cfg.omega1, cfg.omega2, cfg.gamma,
                       protocol.n_pulses, protocol.tau2, _gate_tag(gate_spec))
    events: list[TrajectoryEvent] = []
    h1 = h2 = 0
    n_w = 0 if swaplike else None
    for k in range(protocol.n_pulses):
        t_pulse = k * protocol.tau2
        state, effect = apply_pulse(state, gate, cfg)
        if swaplike:
            n_w += effect.transfer
        if keep_events:
            events.append(TrajectoryEvent(time=t_pulse, kind="P", index=k))
        state, evs = evolve_between_pulses(
            state, protocol.tau2, cfg, rng, t_start=t_pulse,
            eigenstate_shortcut=eigenstate_shortcut)
        for ev in evs:
            if ev.bath == 1:
                h1 += 1 if ev.kind == "E" else -1
            else:
                h2 += 1 if ev.kind == "E" else -1
        if keep_events:
            events.extend(evs)
    if protocol.n_pulses == 0:
        state, evs = evolve_between_pulses(
            state, protocol.tau2, cfg, rng,
            eigenstate_shortcut=eigenstate_shortcut)
        for ev in evs:
            if ev.bath == 1:
                h1 += 1 if ev.kind == "E" else -1
            else:
                h2 += 1 if ev.kind == "E" else -1
        if keep_events:
            events.extend(evs)
    idx_f = state.basis_index
    if idx_f is None:
        pops = np.abs(state.amplitudes) ** 2
        pops = pops / pops.sum()
        idx_f = int(rng.choice(4, p=pops))
    db1 = BASIS_BITS[idx_f][0] - BASIS_BITS[idx0][0]
    db2 = BASIS_BITS[idx_f][1] - BASIS_BITS[idx0][1]
    return TrajectoryRecord(
        params=params,
        initial_state=BASIS_LABELS[idx0],
        final_state=BASIS_LABELS[idx_f],
        p_initial=float(pops0[idx0]),
        p_final=float(pops0[idx_f]),
        h1=h1, h2=h2, db1=db1, db2=db2, n_w=n_w,
        events=tuple(events) if keep_events else None,
    )


def _bit_lane_chunks(
    cfg: EngineConfig,
    protocol: Protocol,
    sample_size: int,
    seed: int,
) -> Iterator[dict]:
    """Chunked exact sampling of the boundary-bit Markov chain.

    Per interval and qubit the end bit is drawn from the exact two-state
    propagator p_end = f + (b_start - f)*exp(-R*tau2) with R = gamma*(2n+1);
    pulses swap the bits and bank the transfer.  Chunk size depends only on
    the pulse count, and each chunk consumes its own (seed, chunk) stream in
    full, so row k is a function of (seed, k, protocol) alone.
    """
    f1 = excited_population(cfg.beta1, cfg.omega1)
    f2 = excited_population(cfg.beta2, cfg.omega2)
    n1 = bose_occupation(cfg.beta1, cfg.omega1)
    n2 = bose_occupation(cfg.beta2, cfg.omega2)
    dec1 = math.exp(-cfg.gamma * (2.0 * n1 + 1.0) * protocol.tau2)
    dec2 = math.exp(-cfg.gamma * (2.0 * n2 + 1.0) * protocol.tau2)
    n_pulses = protocol.n_pulses
    intervals = max(n_pulses, 1)
    cols = 2 + 2 * intervals
    chunk_rows = max(256, min(32768, (1 << 23) // cols))
    n_chunks = -(-sample_size // chunk_rows)
    for c in range(n_chunks):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, c))))
        u = rng.random((chunk_rows, cols))
        rows = min(chunk_rows, sample_size - c * chunk_rows)
        u = u[:rows]
        b1 = (u[:, 0] < f1).astype(np.int64)
        b2 = (u[:, 1] < f2).astype(np.int64)
        b1i = b1.copy()
        b2i = b2.copy()
        h1 = np.zeros(rows, dtype=np.int64)
        h2 = np.zeros(rows, dtype=np.int64)
        m_steps = np.zeros((rows, n_pulses), dtype=np.int8)
        for k in range(intervals):
            if k < n_pulses:
                m_steps[:, k] = (b2 - b1).astype(np.int8)
                b1, b2 = b2, b1
            p1_end = f1 + (b1 - f1) * dec1
            p2_end = f2 + (b2 - f2) * dec2
            e1 = (u[:, 2 + 2 * k] < p1_end).astype(np.int64)
            e2 = (u[:, 3 + 2 * k] < p2_end).astype(np.int64)
            h1 += b1 - e1
            h2 += b2 - e2
            b1, b2 = e1, e2
        yield {
            "b1i": b1i, "b2i": b2i, "b1f": b1, "b2f": b2,
            "h1": h1, "h2": h2,
            "n_w": m_steps.sum(axis=1, dtype=np.int64) if n_pulses else np.zeros(rows, dtype=np.int64),
            "m_steps": m_steps,
        }


def run_ensemble(
    cfg: EngineConfig,
    protocol: Protocol,
    gate_spec: GateSpec,
    sample_size: int,
    seed: int,
    keep_events: bool = False,
    engine: str = "auto",
) -> Iterator[TrajectoryRecord]:
    """Stream sample_size independent trajectory records.

    engine "bits" needs a swap-family gate and cannot keep events; "events"
    and "mcwf" loop full per-trajectory simulations ("mcwf" disables the
    eigenstate shortcut and is the slow oracle).  "auto" picks "bits" for
    swap-family runs without event recording, "events" otherwise.
    """
    if sample_size < 1:
        raise ConfigError(f"sample_size must be at least 1, got {sample_size}")
    swaplike = _is_swaplike(gate_spec)
    if engine == "auto":
        engine = "bits" if swaplike and not keep_events else "events"
    if engine == "bits":
        if not swaplike:
            raise ConfigError("the bit lane only runs swap-family gates")
        if keep_events:
            raise ConfigError("the bit lane does not resolve event times; use engine='events'")
        yield from _bit_lane_records(cfg, protocol, gate_spec, sample_size, seed)
        return
    if engine not in ("events", "mcwf"):
        raise ConfigError(f"unknown engine {engine!r}")
    shortcut = engine == "events"
    for k in range(sample_size):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, k))))
        yield run_trajectory(cfg, protocol, gate_spec, rng,
                             keep_events=keep_events,
                             eigenstate_shortcut=shortcut)


def _bit_lane_records(
    cfg: EngineConfig,
    protocol: Protocol,
    gate_spec: GateSpec,
    sample_size: int,
    seed: int,
) -> Iterator[TrajectoryRecord]:
    pops0 = gibbs_populations(cfg)
    params = RunParams(cfg.beta1, cfg.beta2, cfg.omega1, cfg.omega2, cfg.gamma,
                       protocol.n_pulses, protocol.tau2, _gate_tag(gate_spec))
    for ch in _bit_lane_chunks(cfg, protocol, sample_size, seed):
        idx0 = 3 - 2 * ch["b1i"] - ch["b2i"]
        idxf = 3 - 2 * ch["b1f"] - ch["b2f"]
        db1 = ch["b1f"] - ch["b1i"]
        db2 = ch["b2f"] - ch["b2i"]
        h1a, h2a, nwa = ch["h1"], ch["h2"], ch["n_w"]
        p0 = pops0[idx0]
        pf = pops0[idxf]
        for r in range(len(idx0)):
            yield TrajectoryRecord(
                params=params,
                initial_state=BASIS_LABELS[idx0[r]],
                final_state=BASIS_LABELS[idxf[r]],
                p_initial=float(p0[r]),
                p_final=float(pf[r]),
                h1=int(h1a[r]), h2=int(h2a[r]),
                db1=int(db1[r]), db2=int(db2[r]),
                n_w=int(nwa[r]),
                events=None,
            )


def per_pulse_transfer_moments(
    cfg: EngineConfig,
    protocol: Protocol,
    sample_size: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble mean and standard error of the transfer at each pulse index.

    Returns (means, ses), each of length n_pulses; pulse k's mean transfer
    times omega1 is the per-pulse <dE1>, times -omega2 the per-pulse <dE2>,
    times (omega1-omega2) the per-pulse <w>.
    """
    if protocol.n_pulses < 1:
        raise ConfigError("per-pulse moments need at least one pulse")
    s = np.zeros(protocol.n_pulses, dtype=np.int64)
    s2 = np.zeros(protocol.n_pulses, dtype=np.int64)
    n = 0
    for ch in _bit_lane_chunks(cfg, protocol, sample_size, seed):
        m = ch["m_steps"].astype(np.int64)
        s += m.sum(axis=0)
        s2 += (m * m).sum(axis=0)
        n += m.shape[0]
    mean = s / n
    var = (s2 / n - mean ** 2) * (n / (n - 1))
    return mean, np.sqrt(var / n)
