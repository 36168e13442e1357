"""Behavioral Monte Carlo of the retiming loop plus waveform utilities.

Trials walk the clock position over a data-derived crossing trace one
bit cycle at a time, using the same phase-detector rule as the chain
builders.  Waveform helpers drive an RC ladder to produce eye diagrams
and folded crossing histograms for window extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .jitter import GaussianJitterSpec, IsiTraceModel, WindowSpec, mismatch_substeps

__all__ = [
    "TRAINING_PATTERN",
    "BitSource",
    "ChannelModel",
    "CoarseFirstSpec",
    "TrialConfig",
    "TrialResult",
    "MonteCarloResult",
    "EyeHistogram",
    "generate_bits",
    "propagate_rc",
    "eye_traces",
    "crossing_histogram",
    "run_trial",
    "run_monte_carlo",
    "simulate_coarse_first",
    "simulate_chain",
    "REFERENCE_CHANNELS",
]

# minimum run lengths: one for '1', two for '0'
TRAINING_PATTERN: tuple[int, ...] = (0, 0, 1, 0, 0, 1, 1, 1)

_CHUNK0 = 1024
_CHUNK_MAX = 65536


@dataclass(frozen=True)
class BitSource:
    """Data pattern feeding the channel."""

    kind: str
    p: float = 0.5
    pattern: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("bernoulli", "training_biased", "alternating", "explicit"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "bernoulli" and not 0 <= self.p <= 1:
            raise ValueError("bit probability must lie in [0, 1]")
        if self.kind == "explicit":
            if not self.pattern or any(b not in (0, 1) for b in self.pattern):
                raise ValueError("explicit source needs a nonempty 0/1 pattern")

    @classmethod
    def bernoulli(cls, p: float = 0.5) -> "BitSource":
        return cls("bernoulli", p=p)

    @classmethod
    def training_biased(cls) -> "BitSource":
        return cls("training_biased", pattern=TRAINING_PATTERN)

    @classmethod
    def alternating(cls) -> "BitSource":
        return cls("alternating", pattern=(0, 1))

    @classmethod
    def explicit(cls, bits) -> "BitSource":
        return cls("explicit", pattern=tuple(int(b) for b in bits))

    @property
    def cycle_pattern(self) -> np.ndarray | None:
        if self.pattern is None:
            return None
        return np.asarray(self.pattern, dtype=np.int8)


@dataclass(frozen=True)
class ChannelModel:
    """Either a precomputed crossing trace or a physical RC ladder."""

    kind: str
    trace: IsiTraceModel | None = None
    jitter: GaussianJitterSpec | None = None
    sections: int = 20
    r_per_section: float = 1.0
    c_per_section_ui: float = 0.002
    samples_per_ui: int = 64

    def __post_init__(self):
        if self.kind == "discrete_trace":
            if self.trace is None:
                raise ValueError("discrete_trace channel needs a trace model")
        elif self.kind == "rc_line":
            if self.jitter is not None:
                raise ValueError("crossing jitter applies to discrete traces only")
            if self.sections < 1:
                raise ValueError("ladder needs at least one section")
            if self.r_per_section <= 0 or self.c_per_section_ui <= 0:
                raise ValueError("R and C must be positive")
            if self.samples_per_ui < 16:
                raise ValueError("need at least 16 samples per UI")
        else:
            raise ValueError(f"unknown channel kind {self.kind!r}")

    @classmethod
    def discrete(
        cls, trace: IsiTraceModel, jitter: GaussianJitterSpec | None = None
    ) -> "ChannelModel":
        return cls("discrete_trace", trace=trace, jitter=jitter)

    @classmethod
    def rc(cls, r: float, c: float, samples_per_ui: int, sections: int = 20) -> "ChannelModel":
        return cls(
            "rc_line",
            sections=sections,
            r_per_section=r,
            c_per_section_ui=c,
            samples_per_ui=samples_per_ui,
        )

    @property
    def section_tau_ui(self) -> float:
        return self.r_per_section * self.c_per_section_ui

    def require_trace(self) -> IsiTraceModel:
        if self.trace is None:
            raise ValueError("this operation needs a discrete_trace channel")
        return self.trace


# frozen ladder operating points: single-, double- and quadruple-peaked
# crossing histograms at matched dt <= RC/4
REFERENCE_CHANNELS: dict[str, ChannelModel] = {
    "benign": ChannelModel.rc(r=1.0, c=0.0015, samples_per_ui=2688),
    "moderate": ChannelModel.rc(r=1.0, c=0.0028, samples_per_ui=1472),
    "heavy": ChannelModel.rc(r=1.0, c=0.0050, samples_per_ui=832),
}


@dataclass(frozen=True)
class CoarseFirstSpec:
    """Coarse acquisition: big steps every cycle in the latched direction."""

    coarse_step_steps: int = 1
    duration_cycles: int = 0

    def __post_init__(self):
        if self.coarse_step_steps < 1:
            raise ValueError("coarse step must be at least one fine step")
        if self.duration_cycles < 0:
            raise ValueError("duration must be nonnegative")


@dataclass(frozen=True)
class TrialConfig:
    channel: ChannelModel
    source: BitSource
    window: WindowSpec | None = None
    step_tau: float = 0.001
    initial_position: int | None = None
    max_cycles: int = 1_000_000
    mismatch_percent: float = 0.0
    coarse_first: CoarseFirstSpec | None = None
    record_trajectory: bool = False

    def __post_init__(self):
        if self.step_tau <= 0:
            raise ValueError("step_tau must be positive")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be positive")
        mismatch_substeps(self.mismatch_percent)
        if self.channel.kind == "rc_line":
            # the susceptibility window is measured off the waveform
            if self.window is not None:
                raise ValueError("rc_line trials derive the window from the channel")
            if self.coarse_first is not None:
                raise ValueError("coarse acquisition needs a discrete trace channel")
            return
        trace = self.channel.require_trace()
        if self.window is None:
            raise ValueError("discrete trials need an explicit window")
        width = self.window.width_steps
        if width == 0:
            if self.initial_position not in (None, 0):
                raise ValueError("a degenerate window only admits position 0")
            return
        pos = trace.crossing_positions
        if pos[0] < 0 or pos[-1] > width:
            raise ValueError("crossing band must fit inside the window")
        if not 0 < self.initial < width:
            raise ValueError("initial position must lie strictly inside the window")

    @property
    def initial(self) -> int:
        if self.initial_position is not None:
            return self.initial_position
        if self.window is None:
            raise ValueError("initial position is resolved after window calibration")
        return self.window.initial


@dataclass(frozen=True)
class TrialResult:
    escaped: bool
    escape_cycle: int | None
    exit_side: str | None
    trajectory: np.ndarray | None = None


@dataclass(frozen=True)
class MonteCarloResult:
    """Escape cycles per trial; -1 marks trials that never escaped."""

    escape_cycles: np.ndarray
    exit_sides: np.ndarray  # -1 left, +1 right, 0 not escaped

    @property
    def n_trials(self) -> int:
        return self.escape_cycles.size

    @property
    def escaped_mask(self) -> np.ndarray:
        return self.escape_cycles >= 0

    @property
    def escaped_fraction(self) -> float:
        return float(self.escaped_mask.mean())

    @property
    def mean_cycles(self) -> float:
        return float(self.escape_cycles[self.escaped_mask].mean())

    @property
    def std_cycles(self) -> float:
        cyc = self.escape_cycles[self.escaped_mask]
        return float(cyc.std(ddof=1)) if cyc.size > 1 else 0.0

    @property
    def stderr_cycles(self) -> float:
        n = int(self.escaped_mask.sum())
        return self.std_cycles / np.sqrt(n) if n else float("nan")

    @property
    def exit_right_fraction(self) -> float:
        return float((self.exit_sides > 0).mean())

    def escaped_within(self, cycles: int) -> float:
        mask = self.escaped_mask & (self.escape_cycles <= cycles)
        return float(mask.mean())


def generate_bits(source: BitSource, n: int, rng: np.random.Generator) -> np.ndarray:
    """n bits from the source; pattern sources start at the pattern head."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if source.kind == "bernoulli":
        return (rng.random(n) < source.p).astype(np.int8)
    pat = source.cycle_pattern
    return pat[np.arange(n) % pat.size]


class _BitFeed:
    """Sequential bit supply for one trial with a fixed draw order."""

    def __init__(self, source: BitSource, rng: np.random.Generator):
        self.rng = rng
        self.kind = source.kind
        self.p = source.p
        self.pattern = source.cycle_pattern
        self.offset = 0
        if self.kind in ("training_biased", "alternating"):
            # random pattern phase decorrelates trials of a periodic source
            self.offset = int(rng.integers(self.pattern.size))

    def take(self, n: int) -> np.ndarray:
        if self.kind == "bernoulli":
            return (self.rng.random(n) < self.p).astype(np.int8)
        idx = (self.offset + np.arange(n)) % self.pattern.size
        self.offset = (self.offset + n) % self.pattern.size
        return self.pattern[idx]


def _isi1_codes(seq: np.ndarray) -> np.ndarray:
    """Per-cycle crossing code from a (n+2)-bit window: 0=A, 1=B, -1 none."""
    prev, cur, nxt = seq[:-2], seq[1:-1], seq[2:]
    trans = cur != nxt
    code = np.full(cur.size, -1, dtype=np.int8)
    code[trans & (prev != cur)] = 0
    code[trans & (prev == cur)] = 1
    return code


_ISI2_LUT = np.full(16, -1, dtype=np.int8)
for (_s, _b), _lab in {
    (0b000, 1): "D", (0b001, 0): "A", (0b010, 1): "B", (0b011, 0): "C",
    (0b100, 1): "C", (0b101, 0): "B", (0b110, 1): "A", (0b111, 0): "D",
}.items():
    _ISI2_LUT[_s * 2 + _b] = "ABCD".index(_lab)


def _isi2_codes(seq: np.ndarray) -> np.ndarray:
    """Per-cycle crossing code from a (n+3)-bit window: 0..3=A..D, -1 none."""
    s = (seq[:-3].astype(np.int16) << 2) | (seq[1:-2] << 1) | seq[2:-1]
    return _ISI2_LUT[s * 2 + seq[3:]]


def _first_hit(path: np.ndarray, hi: int) -> tuple[int, int]:
    """(index, side) of the first boundary hit in path, or (-1, 0)."""
    hit = (path <= 0) | (path >= hi)
    if not hit.any():
        return -1, 0
    i = int(np.argmax(hit))
    return i, (-1 if path[i] <= 0 else 1)


def run_trial(config: TrialConfig, seed) -> TrialResult:
    """One trial; seed may be an int or a sequence of ints."""
    rng = np.random.default_rng(seed)
    if config.channel.kind == "rc_line":
        return _rc_trial(config, rng)
    if config.window.width_steps == 0:
        # degenerate window: the start position is already at the edge
        traj = np.zeros(1) if config.record_trajectory else None
        return TrialResult(True, 0, "left", traj)
    trace = config.channel.require_trace()
    s_l, s_r = mismatch_substeps(config.mismatch_percent)
    w = config.window.width_steps
    g = w * s_r
    pos = config.initial * s_r
    feed = _BitFeed(config.source, rng)

    order = trace.order
    ctx = 2 if order == 1 else 3
    tail = feed.take(ctx)
    cross_sub = np.asarray(trace.crossing_positions) * s_r
    jit = config.channel.jitter
    sigma_sub = jit.sigma_steps * s_r if jit is not None else 0.0
    spanning = cross_sub[0] == 0 and cross_sub[-1] == g

    traj: list[np.ndarray] | None = None
    if config.record_trajectory:
        traj = [np.array([pos], dtype=float)]

    def finish(cycle: int | None, side: int) -> TrialResult:
        trajectory = None
        if traj is not None:
            trajectory = np.concatenate(traj) / s_r
            if side:
                trajectory[-1] = 0.0 if side < 0 else float(w)
        if cycle is None:
            return TrialResult(False, None, None, trajectory)
        return TrialResult(True, cycle, "left" if side < 0 else "right", trajectory)

    cycle_base = 0
    remaining = config.max_cycles
    chunk = _CHUNK0

    coarse = config.coarse_first
    if coarse is not None and coarse.duration_cycles > 0:
        if order != 1 or not spanning or sigma_sub:
            raise ValueError(
                "coarse acquisition supports clean two-crossing traces only"
            )
        direction = 1 if rng.random() < 0.5 else -1
        left = min(coarse.duration_cycles, remaining)
        step = coarse.coarse_step_steps * s_r
        while left > 0:
            n = min(chunk, left)
            seq = np.concatenate([tail, feed.take(n)])
            code = _isi1_codes(seq)
            d = np.zeros(n, dtype=np.int64)
            d[code == 0] = 1
            d[code == 1] = -1
            # latch: quiet cycles reuse the most recent detector decision
            marks = np.where(d != 0, np.arange(1, n + 1), 0)
            last = np.maximum.accumulate(marks)
            filled = np.where(last > 0, d[np.maximum(last - 1, 0)], direction)
            path = pos + step * np.cumsum(filled)
            i, side = _first_hit(path, g)
            if traj is not None:
                stop = i + 1 if i >= 0 else n
                traj.append(np.clip(path[:stop], 0, g).astype(float))
            if i >= 0:
                return finish(cycle_base + i + 1, side)
            pos = int(path[-1])
            direction = int(filled[-1])
            tail = seq[-ctx:]
            cycle_base += n
            remaining -= n
            left -= n
            chunk = min(chunk * 4, _CHUNK_MAX)
        chunk = _CHUNK0

    if order == 1 and spanning and not sigma_sub:
        # crossing A sits left of every interior position and B right of
        # it, so the move direction depends only on the label
        while remaining > 0:
            n = min(chunk, remaining)
            seq = np.concatenate([tail, feed.take(n)])
            code = _isi1_codes(seq)
            moves = np.zeros(n, dtype=np.int64)
            moves[code == 0] = s_r
            moves[code == 1] = -s_l
            path = pos + np.cumsum(moves)
            i, side = _first_hit(path, g)
            if traj is not None:
                stop = i + 1 if i >= 0 else n
                traj.append(np.clip(path[:stop], 0, g).astype(float))
            if i >= 0:
                return finish(cycle_base + i + 1, side)
            pos = int(path[-1])
            tail = seq[-ctx:]
            cycle_base += n
            remaining -= n
            chunk = min(chunk * 4, _CHUNK_MAX)
        return finish(None, 0)

    codes_of = _isi1_codes if order == 1 else _isi2_codes
    while remaining > 0:
        n = min(chunk, remaining)
        seq = np.concatenate([tail, feed.take(n)])
        code = codes_of(seq)
        pos_path = np.empty(n, dtype=np.int64) if traj is not None else None
        prev_t = 0
        for t in np.nonzero(code >= 0)[0]:
            if pos_path is not None:
                pos_path[prev_t:t] = pos
                prev_t = t
            c = cross_sub[code[t]]
            if sigma_sub:
                c = c + sigma_sub * rng.standard_normal()
            if c < pos:
                pos += s_r
            elif c > pos:
                pos -= s_l
            elif rng.random() < 0.5:
                pos += s_r
            else:
                pos -= s_l
            if pos_path is not None:
                pos_path[t] = pos
                prev_t = t + 1
            if pos <= 0 or pos >= g:
                if pos_path is not None:
                    traj.append(np.clip(pos_path[: t + 1], 0, g).astype(float))
                return finish(cycle_base + int(t) + 1, -1 if pos <= 0 else 1)
        if pos_path is not None:
            pos_path[prev_t:] = pos
            traj.append(pos_path.astype(float))
        tail = seq[-ctx:]
        cycle_base += n
        remaining -= n
        chunk = min(chunk * 4, _CHUNK_MAX)
    return finish(None, 0)


_RC_CAL_UI = 288


def _rc_trial(config: TrialConfig, rng: np.random.Generator) -> TrialResult:
    """Trial over a physical line: crossings are measured off the waveform.

    A bernoulli calibration burst locates the susceptibility band; the
    payload then runs through the same filter state so the line never
    resets.  Window width in steps comes from the measured band width.
    """
    ch = config.channel
    spu = ch.samples_per_ui
    gain, mu, wout = _rc_system(ch)
    state = np.zeros((gain.size, 1))

    def push(bits: np.ndarray) -> np.ndarray:
        u = np.repeat(bits.astype(float), spu)
        out = np.zeros(u.size)
        for i in range(gain.size):
            y, state[i] = lfilter([gain[i]], [1.0, -mu[i]], u, zi=state[i])
            out += wout[i] * y
        return out

    cal_bits = (rng.random(_RC_CAL_UI) < 0.5).astype(np.int64)
    wave = push(cal_bits)
    hist = crossing_histogram(wave, spu)
    band, win_ui = hist.band_start_ui, hist.window_ui

    s_l, s_r = mismatch_substeps(config.mismatch_percent)
    w = max(2, int(round(win_ui / config.step_tau)))
    init = config.initial_position if config.initial_position is not None else w // 2
    if not 0 < init < w:
        raise ValueError(
            f"initial position must lie strictly inside the measured {w}-step window"
        )
    g = w * s_r
    pos = init * s_r
    scale = s_r / config.step_tau

    feed = _BitFeed(config.source, rng)
    traj: list[np.ndarray] | None = None
    if config.record_trajectory:
        traj = [np.array([pos], dtype=float)]

    def finish(cycle: int | None, side: int) -> TrialResult:
        trajectory = None
        if traj is not None:
            trajectory = np.concatenate(traj) / s_r
            if side:
                trajectory[-1] = 0.0 if side < 0 else float(w)
        if cycle is None:
            return TrialResult(False, None, None, trajectory)
        return TrialResult(True, cycle, "left" if side < 0 else "right", trajectory)

    cycle_base = 0
    remaining = config.max_cycles
    chunk = _CHUNK0
    prev = wave[-1]
    while remaining > 0:
        n = min(chunk, remaining)
        y = push(feed.take(n))
        s = np.r_[prev, y] - 0.5
        prev = y[-1]
        flips = np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0]
        # fractional crossing times, shifted by the one-sample lookback
        t_ui = (flips + s[flips] / (s[flips] - s[flips + 1]) - 1.0) / spu
        ui = np.floor(t_ui).astype(np.int64)
        # first crossing per cycle
        keep = np.r_[True, ui[1:] != ui[:-1]] if ui.size else np.zeros(0, dtype=bool)
        pos_path = np.empty(n, dtype=np.int64) if traj is not None else None
        prev_t = 0
        for t, tu in zip(ui[keep], t_ui[keep]):
            x = (tu % 1.0 - band) % 1.0
            if x > (win_ui + 1.0) / 2:
                x -= 1.0  # crossing just left of the band start
            c = x * scale
            tp = max(int(t), 0)
            if pos_path is not None:
                pos_path[prev_t:tp] = pos
            if c < pos:
                pos += s_r
            elif c > pos:
                pos -= s_l
            elif rng.random() < 0.5:
                pos += s_r
            else:
                pos -= s_l
            if pos_path is not None:
                pos_path[tp] = pos
                prev_t = tp + 1
            if pos <= 0 or pos >= g:
                if pos_path is not None:
                    traj.append(np.clip(pos_path[: tp + 1], 0, g).astype(float))
                return finish(cycle_base + int(t) + 1, -1 if pos <= 0 else 1)
        if pos_path is not None:
            pos_path[prev_t:] = pos
            traj.append(pos_path.astype(float))
        cycle_base += n
        remaining -= n
        chunk = min(chunk * 4, _CHUNK_MAX)
    return finish(None, 0)


def _trial_seed(base_seed, k: int):
    if isinstance(base_seed, (list, tuple)):
        return tuple(base_seed) + (k,)
    return (int(base_seed), k)


def run_monte_carlo(config: TrialConfig, trials: int, base_seed) -> MonteCarloResult:
    """Independent trials with per-trial seeds (base_seed, trial_index)."""
    if trials < 1:
        raise ValueError("need at least one trial")
    cfg = config
    if config.record_trajectory:
        # trajectories are per-trial artifacts; drop for bulk runs
        cfg = replace(config, record_trajectory=False)
    cycles = np.empty(trials, dtype=np.int64)
    sides = np.zeros(trials, dtype=np.int8)
    for k in range(trials):
        res = run_trial(cfg, _trial_seed(base_seed, k))
        cycles[k] = res.escape_cycle if res.escaped else -1
        if res.escaped:
            sides[k] = -1 if res.exit_side == "left" else 1
    return MonteCarloResult(cycles, sides)


def simulate_coarse_first(config: TrialConfig, trials: int, base_seed) -> MonteCarloResult:
    """Monte Carlo with the coarse phase enabled; degenerate without one."""
    return run_monte_carlo(config, trials, base_seed)


def simulate_chain(
    chain,
    initial_state: int,
    trials: int,
    base_seed,
    max_steps: int = 100_000,
) -> MonteCarloResult:
    """Direct Monte Carlo over an AbsorbingChain's transition rows.

    Cross-validates any analytic chain against sampled absorption times.
    Exit side is the absorbing state's rank (first = left).
    """
    rng = np.random.default_rng(base_seed)
    cum = np.cumsum(chain.transitions, axis=1)
    absorbing = sorted(chain.absorbing)
    states = np.full(trials, initial_state, dtype=np.int64)
    cycles = np.full(trials, -1, dtype=np.int64)
    sides = np.zeros(trials, dtype=np.int8)
    active = np.ones(trials, dtype=bool)
    for step in range(1, max_steps + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        u = rng.random(idx.size)
        cur = states[idx]
        order = np.argsort(cur, kind="stable")
        cur_o = cur[order]
        starts = np.flatnonzero(np.r_[True, cur_o[1:] != cur_o[:-1]])
        nxt = np.empty(idx.size, dtype=np.int64)
        for a, b in zip(starts, np.r_[starts[1:], cur_o.size]):
            s = cur_o[a]
            nxt[order[a:b]] = np.searchsorted(cum[s], u[order[a:b]], side="right")
        states[idx] = nxt
        done = np.isin(nxt, absorbing)
        hit = idx[done]
        cycles[hit] = step
        sides[hit] = np.where(states[hit] == absorbing[0], -1, 1)
        active[hit] = False
    return MonteCarloResult(cycles, sides)


def _rc_system(channel: ChannelModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward-Euler modal filters for the ladder.

    The section matrix is symmetric tridiagonal so one eigh gives a bank
    of first-order filters: per mode a numerator gain, a pole, and an
    output weight.
    """
    spu = channel.samples_per_ui
    rc = channel.section_tau_ui
    dt = 1.0 / spu
    if dt > rc / 4 + 1e-15:
        raise ValueError(
            f"time step {dt:.3g} UI exceeds RC/4 = {rc / 4:.3g} UI; raise samples_per_ui"
        )
    n = channel.sections
    a = np.zeros((n, n))
    idx = np.arange(n)
    a[idx, idx] = -2.0
    a[n - 1, n - 1] = -1.0
    a[idx[:-1], idx[:-1] + 1] = 1.0
    a[idx[:-1] + 1, idx[:-1]] = 1.0
    a /= rc
    lam, q = np.linalg.eigh(a)
    mu = 1.0 / (1.0 - dt * lam)
    gain = dt * mu * q[0, :] / rc
    return gain, mu, q[-1, :]


def propagate_rc(channel: ChannelModel, bits: np.ndarray) -> np.ndarray:
    """NRZ bits through the RC ladder; returns the far-end waveform."""
    if channel.kind != "rc_line":
        raise ValueError("propagate_rc needs an rc_line channel")
    spu = channel.samples_per_ui
    gain, mu, wout = _rc_system(channel)
    u = np.repeat(np.asarray(bits, dtype=float), spu)
    out = np.zeros(u.size)
    for i in range(gain.size):
        out += wout[i] * lfilter([gain[i]], [1.0, -mu[i]], u)
    return out


def eye_traces(
    waveform: np.ndarray, samples_per_ui: int, skip_ui: int = 30, n_segments: int = 40
) -> np.ndarray:
    """(n_segments, samples_per_ui) overlay of consecutive UI slices."""
    start = skip_ui * samples_per_ui
    avail = (waveform.size - start) // samples_per_ui
    if avail < 1:
        raise ValueError("waveform too short for the requested overlay")
    n_segments = min(n_segments, avail)
    stop = start + n_segments * samples_per_ui
    return waveform[start:stop].reshape(n_segments, samples_per_ui)


@dataclass(frozen=True)
class EyeHistogram:
    """Threshold crossings folded into one UI, with cluster structure."""

    crossings_ui: np.ndarray
    bin_centers: np.ndarray
    counts: np.ndarray
    cluster_centers: np.ndarray
    cluster_weights: np.ndarray
    window_ui: float
    sub_gaps_ui: np.ndarray
    band_start_ui: float = 0.0

    @property
    def n_clusters(self) -> int:
        return int(self.cluster_centers.size)

    @property
    def eye_opening_ui(self) -> float:
        """Horizontal eye opening: the crossing-free fraction of the UI."""
        return 1.0 - float(self.window_ui)


def crossing_histogram(
    waveform: np.ndarray,
    samples_per_ui: int,
    *,
    threshold: float = 0.5,
    warmup_ui: int = 30,
    bins: int = 100,
    cluster_gap_ui: float = 0.02,
) -> EyeHistogram:
    """Fold threshold crossings mod 1 UI and group them into clusters.

    Clusters split at gaps wider than cluster_gap_ui after rotating the
    largest circular gap onto the fold seam.  window_ui is the full
    span of the rotated crossing band.
    """
    s = np.asarray(waveform, dtype=float) - threshold
    flips = np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0]
    t = (flips + s[flips] / (s[flips] - s[flips + 1])) / samples_per_ui
    t = t[t >= warmup_ui]
    if t.size == 0:
        raise ValueError("waveform contains no threshold crossings after warmup")
    folded = np.sort(t % 1.0)

    gaps = np.diff(folded, append=folded[0] + 1.0)
    seam = int(np.argmax(gaps))
    rotated = np.r_[folded[seam + 1 :], folded[: seam + 1] + 1.0]
    rotated -= np.floor(rotated[0])

    splits = np.nonzero(np.diff(rotated) > cluster_gap_ui)[0] + 1
    groups = np.split(rotated, splits)
    centers = np.array([grp.mean() % 1.0 for grp in groups])
    weights = np.array([grp.size for grp in groups], dtype=np.int64)
    window = float(rotated[-1] - rotated[0])
    sub_gaps = np.array([b.mean() - a.mean() for a, b in zip(groups, groups[1:])])

    counts, edges = np.histogram(folded, bins=bins, range=(0.0, 1.0))
    return EyeHistogram(
        crossings_ui=folded,
        bin_centers=(edges[:-1] + edges[1:]) / 2,
        counts=counts,
        cluster_centers=centers,
        cluster_weights=weights,
        window_ui=window,
        sub_gaps_ui=sub_gaps,
        band_start_ui=float(rotated[0] % 1.0),
    )
