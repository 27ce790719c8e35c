"""Piecewise parameter trajectories for the adiabatic gate protocols.

A :class:`ParamPath` is an ordered list of segments (ramps, holds and
zero-duration jumps) over named control parameters, plus the timing
symmetry constraints the protocol relies on. Constructors build the three
gate trajectories; :func:`verify_timing` re-checks the declared symmetries
on a dense grid, so a corrupted or hand-edited path is detected rather than
silently propagated.

Control ramps are expressed through an :class:`UnknownMap`: a smooth,
strictly monotone map from an experimental knob to the physical parameter,
known only at its endpoints (off / maximal). The protocols must produce the
same gate for any such map; the constructors therefore only ever use the
map through time-symmetric ramp profiles.

Sign conventions: the single-qubit drive phase ``phi`` is a real control;
in the (delta, omega_x) plane ``omega_x = omega * cos(phi)`` with
``phi in {0, pi}``. The Hadamard-like trajectory runs its detuning leg
towards ``-delta_m``: with this package's sigma_z sign convention that is
the sign that realizes the textbook state mapping
``(|0>+|1>)/sqrt(2) -> |0>``, ``(|0>-|1>)/sqrt(2) -> -|1>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

__all__ = [
    "Profile",
    "LinearProfile",
    "SmoothstepProfile",
    "MappedProfile",
    "UnknownMap",
    "Segment",
    "Constraint",
    "ConstraintCheck",
    "TimingReport",
    "ParamPath",
    "ScheduleLimits",
    "ScheduleError",
    "phase_gate_path",
    "hadamard_path",
    "cnot_u1_path",
    "cnot_u3_path",
    "sample",
    "verify_timing",
]


class ScheduleError(ValueError):
    """Raised for invalid protocol parameters or malformed paths."""


# ---------------------------------------------------------------------------
# ramp profiles
# ---------------------------------------------------------------------------

class Profile:
    """Normalized ramp shape p: [0,1] -> [0,1] with p(0)=0, p(1)=1."""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reversed(self) -> "Profile":
        """The shape q(x) = 1 - p(1-x), i.e. the same ramp run backwards."""
        return _ReversedProfile(self)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class _ReversedProfile(Profile):
    base: Profile

    def __call__(self, x):
        return 1.0 - self.base(1.0 - np.asarray(x, dtype=float))

    def reversed(self):
        return self.base

    def to_json(self):
        return {"kind": "reversed", "base": self.base.to_json()}


@dataclass(frozen=True)
class LinearProfile(Profile):
    def __call__(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def to_json(self):
        return {"kind": "linear"}


@dataclass(frozen=True)
class SmoothstepProfile(Profile):
    """Quintic smoothstep: zero first and second derivatives at both ends."""

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return x ** 3 * (10.0 + x * (-15.0 + 6.0 * x))

    def to_json(self):
        return {"kind": "smoothstep"}


@dataclass(frozen=True)
class MappedProfile(Profile):
    """A time profile pushed through a monotone control map.

    ``p(x) = fmap.shape(base(x))``: the knob follows ``base`` in time and
    the physical parameter follows the (unknown) map of the knob.
    """

    fmap: "UnknownMap"
    base: Profile = field(default_factory=SmoothstepProfile)

    def __call__(self, x):
        return self.fmap.shape(self.base(x))

    def to_json(self):
        return {"kind": "mapped", "base": self.base.to_json(), "map": self.fmap.to_json()}


# ---------------------------------------------------------------------------
# unknown monotone control maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnknownMap:
    """Smooth strictly-monotone knob-to-parameter map on [0, i_max].

    ``f(0) = 0`` and ``f(i_max) = value_max`` exactly; the interior shape is
    a seeded mixture of Gaussian bumps added to a uniform slope,
    integrated in closed form (so the map is C-infinity and monotone by
    construction). ``seed=None`` gives the linear map.
    """

    value_max: float
    i_max: float = 1.0
    amplitudes: tuple = ()
    centers: tuple = ()
    widths: tuple = ()
    seed: int | None = None

    @classmethod
    def linear(cls, value_max: float, i_max: float = 1.0) -> "UnknownMap":
        return cls(value_max=value_max, i_max=i_max)

    @classmethod
    def random(cls, value_max: float, seed: int, i_max: float = 1.0,
               bumps: int = 3, strength: float = 3.0) -> "UnknownMap":
        rng = np.random.default_rng(seed)
        return cls(
            value_max=value_max,
            i_max=i_max,
            amplitudes=tuple(rng.uniform(0.0, strength, bumps)),
            centers=tuple(rng.uniform(0.15, 0.85, bumps)),
            widths=tuple(rng.uniform(0.05, 0.25, bumps)),
            seed=seed,
        )

    def _raw(self, x):
        total = np.asarray(x, dtype=float).copy()
        for a, c, s in zip(self.amplitudes, self.centers, self.widths):
            total = total + a * s * math.sqrt(math.pi / 2.0) * (
                erf((x - c) / (math.sqrt(2.0) * s)) - erf(-c / (math.sqrt(2.0) * s)))
        return total

    def shape(self, x):
        """Normalized map on [0,1]: shape(0)=0, shape(1)=1, strictly increasing."""
        return self._raw(np.asarray(x, dtype=float)) / self._raw(1.0)

    def __call__(self, knob):
        """Physical value at knob setting ``knob`` in [0, i_max]."""
        return self.value_max * self.shape(np.asarray(knob, dtype=float) / self.i_max)

    def rescaled(self, value_max: float) -> "UnknownMap":
        """Same knob shape, different physical endpoint."""
        return replace(self, value_max=value_max)

    def is_monotone(self, samples: int = 512) -> bool:
        xs = np.linspace(0.0, 1.0, samples)
        return bool(np.all(np.diff(self.shape(xs)) > 0))

    def to_json(self) -> dict:
        return {
            "value_max": self.value_max,
            "i_max": self.i_max,
            "amplitudes": list(self.amplitudes),
            "centers": list(self.centers),
            "widths": list(self.widths),
            "seed": self.seed,
        }


def _check_map(fmap: UnknownMap | None, value_max: float) -> UnknownMap:
    if fmap is None:
        return UnknownMap.linear(value_max)
    if not fmap.is_monotone():
        raise ScheduleError("control map must be strictly increasing")
    return fmap.rescaled(value_max)


# ---------------------------------------------------------------------------
# segments and paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """One piece of the trajectory over all named parameters.

    ``kind`` is one of ``ramp`` / ``hold`` / ``jump``. Values evolve as
    ``start + (end - start) * profile(x)`` with x the fractional progress;
    holds require start == end, jumps require zero duration and a change.
    """

    kind: str
    duration: float
    start_values: tuple
    end_values: tuple
    profile: Profile = field(default_factory=SmoothstepProfile)

    def __post_init__(self):
        if self.kind not in ("ramp", "hold", "jump"):
            raise ScheduleError(f"unknown segment kind {self.kind!r}")
        if self.duration < 0:
            raise ScheduleError("segment duration must be >= 0")
        same = self.start_values == self.end_values
        if self.kind == "hold" and not same:
            raise ScheduleError("hold segment must keep values constant")
        if self.kind == "jump" and (self.duration != 0 or same):
            raise ScheduleError("jump segment must have zero duration and change values")
        if self.kind == "ramp" and self.duration == 0:
            raise ScheduleError("ramp segment needs a positive duration")

    def values_at(self, x: np.ndarray) -> np.ndarray:
        """Values at fractional progress x, shape (len(x), n_params)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        start = np.array(self.start_values, dtype=float)
        end = np.array(self.end_values, dtype=float)
        if self.kind == "hold":
            return np.broadcast_to(start, (x.size, start.size)).copy()
        p = np.asarray(self.profile(x), dtype=float)
        return start + np.outer(p, end - start)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "duration": self.duration,
            "start_values": list(self.start_values),
            "end_values": list(self.end_values),
            "profile": self.profile.to_json(),
        }


@dataclass(frozen=True)
class Constraint:
    """Linear two-point relation  A(a1*t + a0) + sign * B(b1*t + b0) + const = 0.

    ``param_a`` / ``param_b`` are parameter names; ``param_b`` may be None
    for single-point relations (e.g. an endpoint pinned to a value). The
    relation is required to hold for all t in [t_lo, t_hi] within ``tol``.
    """

    label: str
    param_a: str
    map_a: tuple
    t_lo: float
    t_hi: float
    sign: float = 0.0
    param_b: str | None = None
    map_b: tuple = (1.0, 0.0)
    const: float = 0.0
    tol: float = 1e-12

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "param_a": self.param_a, "map_a": list(self.map_a),
            "param_b": self.param_b, "map_b": list(self.map_b),
            "sign": self.sign, "const": self.const,
            "domain": [self.t_lo, self.t_hi], "tol": self.tol,
        }


@dataclass(frozen=True)
class ConstraintCheck:
    label: str
    max_violation: float
    t_at_max: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


@dataclass(frozen=True)
class TimingReport:
    checks: tuple

    @property
    def max_violation(self) -> float:
        return max((c.max_violation for c in self.checks), default=0.0)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __iter__(self):
        return iter(self.checks)


@dataclass(frozen=True)
class ParamPath:
    """Time-contiguous parameter trajectory with declared symmetry constraints."""

    names: tuple
    segments: tuple
    constraints: tuple = ()
    meta: dict = field(default_factory=dict)

    starts: np.ndarray = field(init=False, repr=False, compare=False)
    total_duration: float = field(init=False)

    def __post_init__(self):
        starts = np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])
        object.__setattr__(self, "starts", starts[:-1])
        object.__setattr__(self, "total_duration", float(starts[-1]))
        for seg in self.segments:
            if len(seg.start_values) != len(self.names) or len(seg.end_values) != len(self.names):
                raise ScheduleError("segment arity does not match parameter names")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if prev.end_values != nxt.start_values:
                raise ScheduleError(
                    f"discontinuity between segments outside a jump: "
                    f"{prev.end_values} -> {nxt.start_values}")

    def sample_many(self, ts) -> np.ndarray:
        """Right-continuous piecewise evaluation, shape (len(ts), n_params)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        eps = 1e-9 * max(self.total_duration, 1.0)
        if np.any(ts < -eps) or np.any(ts > self.total_duration + eps):
            raise ScheduleError("sample time outside [0, total_duration]")
        ts = np.clip(ts, 0.0, self.total_duration)
        idx = np.searchsorted(self.starts, ts, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        out = np.empty((ts.size, len(self.names)), dtype=float)
        for k in np.unique(idx):
            seg = self.segments[k]
            mask = idx == k
            if seg.duration > 0:
                x = (ts[mask] - self.starts[k]) / seg.duration
            else:
                x = np.ones(int(np.count_nonzero(mask)))
            out[mask] = seg.values_at(x)
        return out

    def sample(self, t: float) -> tuple:
        return tuple(self.sample_many([t])[0])

    def window(self, t0: float, t1: float) -> tuple:
        """Clip to [t0, t1]: list of (global_start, duration, segment, x0, x1)."""
        pieces = []
        for k, seg in enumerate(self.segments):
            if seg.duration == 0:
                continue
            a, b = self.starts[k], self.starts[k] + seg.duration
            lo, hi = max(a, t0), min(b, t1)
            if hi <= lo:
                continue
            pieces.append((lo, hi - lo, seg, (lo - a) / seg.duration, (hi - a) / seg.duration))
        return tuple(pieces)

    def value_of(self, name: str, ts) -> np.ndarray:
        return self.sample_many(ts)[:, self.names.index(name)]

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "total_duration": self.total_duration,
            "segments": [s.to_json() for s in self.segments],
            "constraints": [c.to_json() for c in self.constraints],
            "meta": {k: v for k, v in self.meta.items() if not callable(v)},
        }


def sample(path: ParamPath, t: float) -> tuple:
    """Parameter tuple at time t (right-continuous at jumps)."""
    return path.sample(t)


def verify_timing(path: ParamPath, points_per_leg: int = 1000) -> TimingReport:
    """Evaluate every declared constraint on a dense grid of interior points.

    Points are taken strictly inside each constraint's domain so that the
    two-sided relations are never evaluated exactly at a jump instant
    (where the path is right-continuous by convention, not symmetric).
    """
    n = max(int(points_per_leg), 2)
    checks = []
    for c in path.constraints:
        if c.t_hi < c.t_lo:
            raise ScheduleError(f"constraint {c.label!r} has an empty domain")
        if c.t_hi == c.t_lo:
            ts = np.array([c.t_lo])
        else:
            ts = c.t_lo + (c.t_hi - c.t_lo) * (np.arange(n) + 0.5) / n
        va = path.value_of(c.param_a, c.map_a[0] * ts + c.map_a[1])
        res = va + c.const
        if c.param_b is not None:
            res = res + c.sign * path.value_of(c.param_b, c.map_b[0] * ts + c.map_b[1])
        k = int(np.argmax(np.abs(res)))
        checks.append(ConstraintCheck(c.label, float(np.abs(res[k])), float(ts[k]), c.tol))
    return TimingReport(tuple(checks))


# ---------------------------------------------------------------------------
# protocol limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleLimits:
    """Reachable extreme control values and the protocol timing.

    ``T`` is the duration of one adiabatic leg; every gate trajectory here
    takes ``2 T`` in total. Only extreme values enter: the protocols are,
    by design, independent of how the controls move between them.
    """

    T: float
    omega_m: float = 0.0
    delta_m: float = 0.0
    omega_t_m: float = 0.0
    delta_t_m: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise ScheduleError("leg duration T must be positive")


def _require(cond: bool, msg: str):
    if not cond:
        raise ScheduleError(msg)


# ---------------------------------------------------------------------------
# gate trajectories
# ---------------------------------------------------------------------------

def phase_gate_path(limits: ScheduleLimits, fmap: UnknownMap | None = None) -> ParamPath:
    """Trajectory over (omega, phi) realizing a phase gate of angle theta.

    With the detuning held at zero: ramp the drive on at phi = 0, rotate
    phi to theta/2, jump phi by pi (spin-echo element), rotate phi on to
    theta + pi and ramp the drive off. The echo makes the two adiabatic
    halves' dynamical phases cancel and the drive magnitude never matters,
    only the endpoints and the time symmetry:

        omega(t) = omega(2T - t),    phi(t) = pi + theta - phi(2T - t).
    """
    theta, om, T = limits.theta, limits.omega_m, limits.T
    _require(0.0 <= theta < 2.0 * math.pi, "theta must lie in [0, 2*pi)")
    _require(om > 0, "omega_m must be positive")
    f = _check_map(fmap, om)
    ramp = MappedProfile(f)
    rot = SmoothstepProfile()
    h = T / 2.0
    segs = (
        Segment("ramp", h, (0.0, 0.0), (om, 0.0), ramp),
        Segment("ramp", h, (om, 0.0), (om, theta / 2), rot),
        Segment("jump", 0.0, (om, theta / 2), (om, theta / 2 + math.pi)),
        Segment("ramp", h, (om, theta / 2 + math.pi), (om, theta + math.pi), rot),
        Segment("ramp", h, (om, theta + math.pi), (0.0, theta + math.pi), ramp.reversed()),
    )
    cons = (
        Constraint("omega_echo", "omega", (1.0, 0.0), 0.0, 2 * T,
                   sign=-1.0, param_b="omega", map_b=(-1.0, 2 * T)),
        Constraint("phi_echo", "phi", (1.0, 0.0), 0.0, 2 * T,
                   sign=1.0, param_b="phi", map_b=(-1.0, 2 * T),
                   const=-(math.pi + theta)),
        Constraint("omega_start_off", "omega", (1.0, 0.0), 0.0, 0.0),
        Constraint("omega_end_off", "omega", (1.0, 0.0), 2 * T, 2 * T),
    )
    meta = {"gate": "phase", "model": "h1_polar", "theta": theta, "T": T,
            "fmap": f.to_json()}
    return ParamPath(("omega", "phi"), segs, cons, meta)


def hadamard_path(limits: ScheduleLimits, fmap: UnknownMap | None = None) -> ParamPath:
    """Trajectory over (delta, omega_x) realizing the Hadamard-like gate.

    Leg A (duration T, four equal steps): detuning out and back while the
    drive dips to zero and recovers, time-symmetric about T/2. Then the
    drive sign jumps (phi by pi) and leg B retraces the first half of leg A
    at half speed, which equalizes the two legs' dynamical phase integrals:

        delta(t) = delta(T - t),   omega_x(t) = omega_x(T - t)   (t < T)
        delta(T + t) = delta(t/2), omega_x(T + t) = -omega_x(t/2).
    """
    om, T = limits.omega_m, limits.T
    _require(limits.delta_m > 0, "delta_m must be positive")
    _require(om > 0, "omega_m must be positive")
    # negative detuning leg: the sign that yields (|0>+|1>)/sqrt2 -> |0>
    # under the sigma_z|0> = +|0> convention used by the h1 builder.
    dm = -limits.delta_m
    f = _check_map(fmap, om)
    dramp = MappedProfile(f.rescaled(abs(dm)))
    oramp = MappedProfile(f)
    q = T / 4.0
    segs = (
        Segment("ramp", q, (0.0, om), (dm, om), dramp),
        Segment("ramp", q, (dm, om), (dm, 0.0), oramp.reversed()),
        Segment("ramp", q, (dm, 0.0), (dm, om), oramp),
        Segment("ramp", q, (dm, om), (0.0, om), dramp.reversed()),
        Segment("jump", 0.0, (0.0, om), (0.0, -om)),
        Segment("ramp", 2 * q, (0.0, -om), (dm, -om), dramp),
        Segment("ramp", 2 * q, (dm, -om), (dm, 0.0), oramp.reversed()),
    )
    cons = (
        Constraint("legA_delta_sym", "delta", (1.0, 0.0), 0.0, T,
                   sign=-1.0, param_b="delta", map_b=(-1.0, T)),
        Constraint("legA_omega_sym", "omega_x", (1.0, 0.0), 0.0, T,
                   sign=-1.0, param_b="omega_x", map_b=(-1.0, T)),
        Constraint("legB_delta_halfspeed", "delta", (1.0, T), 0.0, T,
                   sign=-1.0, param_b="delta", map_b=(0.5, 0.0)),
        Constraint("legB_omega_flip", "omega_x", (1.0, T), 0.0, T,
                   sign=1.0, param_b="omega_x", map_b=(0.5, 0.0)),
    )
    meta = {"gate": "hadamard", "model": "h1_xz", "T": T, "fmap": f.to_json()}
    return ParamPath(("delta", "omega_x"), segs, cons, meta)


def cnot_u1_path(limits: ScheduleLimits, fmap: UnknownMap | None = None) -> ParamPath:
    """Trajectory over (delta_t, omega_x_t) for the first two-qubit process.

    Starting with the conditional shift at its extreme and the drive off:
    drive on, shift off, drive sign jump, shift back on, drive off. The
    time symmetries cancel the level-splitting dynamical phases and zero
    the drive integral:

        delta_t(t) = delta_t(2T - t),   omega_x_t(t) = -omega_x_t(2T - t).

    The overall-block dynamical phase xi = -(1/2) * integral(delta_t) is
    unknowable by design; the matching zero-drive trajectory from
    :func:`cnot_u3_path` reproduces and cancels it.
    """
    dt_m, om, T = limits.delta_t_m, limits.omega_t_m, limits.T
    _require(dt_m > 0, "delta_t_m must be positive")
    _require(om > 0, "omega_t_m must be positive")
    f = _check_map(fmap, om)
    oramp = MappedProfile(f)
    dramp = MappedProfile(f.rescaled(dt_m))
    h = T / 2.0
    segs = (
        Segment("ramp", h, (dt_m, 0.0), (dt_m, om), oramp),
        Segment("ramp", h, (dt_m, om), (0.0, om), dramp.reversed()),
        Segment("jump", 0.0, (0.0, om), (0.0, -om)),
        Segment("ramp", h, (0.0, -om), (dt_m, -om), dramp),
        Segment("ramp", h, (dt_m, -om), (dt_m, 0.0), oramp.reversed()),
    )
    cons = (
        Constraint("delta_echo", "delta_t", (1.0, 0.0), 0.0, 2 * T,
                   sign=-1.0, param_b="delta_t", map_b=(-1.0, 2 * T)),
        Constraint("omega_odd", "omega_x_t", (1.0, 0.0), 0.0, 2 * T,
                   sign=1.0, param_b="omega_x_t", map_b=(-1.0, 2 * T)),
    )
    meta = {"gate": "cnot_u1", "model": "h2_xz", "T": T, "fmap": f.to_json()}
    return ParamPath(("delta_t", "omega_x_t"), segs, cons, meta)


def cnot_u3_path(u1_path: ParamPath) -> ParamPath:
    """Zero-drive companion of a cnot_u1 trajectory.

    The conditional-shift trajectory is copied segment for segment with the
    drive identically zero. Propagated with a target-qubit NOT echo at the
    midpoint and the end (see :func:`qgate.propagator.evolve_with_echo`),
    the result phases both first-qubit-|1> states by the same xi the
    companion u1 process acquired; the timing equality is what makes the
    two unknown phases identical.
    """
    if u1_path.meta.get("gate") != "cnot_u1":
        raise ScheduleError("cnot_u3_path requires a path built by cnot_u1_path")
    names = u1_path.names
    oidx = names.index("omega_x_t")

    def zero_drive(vals):
        out = list(vals)
        out[oidx] = 0.0
        return tuple(out)

    segs = []
    for seg in u1_path.segments:
        start, end = zero_drive(seg.start_values), zero_drive(seg.end_values)
        if seg.kind == "jump" and start == end:
            continue  # the drive-sign jump disappears at zero drive
        kind = seg.kind if start != end else ("hold" if seg.duration > 0 else seg.kind)
        segs.append(Segment(kind, seg.duration, start, end, seg.profile))
    T = u1_path.meta["T"]
    cons = (
        Constraint("delta_echo", "delta_t", (1.0, 0.0), 0.0, 2 * T,
                   sign=-1.0, param_b="delta_t", map_b=(-1.0, 2 * T)),
        Constraint("drive_off", "omega_x_t", (1.0, 0.0), 0.0, 2 * T),
    )
    meta = dict(u1_path.meta)
    meta.update({"gate": "cnot_u3", "echo_times": (T, 2 * T)})
    return ParamPath(names, tuple(segs), cons, meta)
