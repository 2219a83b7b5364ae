"""Domain types, the LIDARP instance file format, and the benchmark generator.

All times are integer minutes; the excess factor and objective weights are
exact rationals so that feasibility and objective arithmetic never depend
on floating-point tolerances.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction


class InstanceError(Exception):
    """Base class for instance-level failures."""


class FormatSyntaxError(InstanceError):
    """Raised when the instance text does not conform to the grammar."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


class InvariantError(InstanceError):
    """Raised when a structurally valid file violates a domain invariant."""


class DegenerateLine(InstanceError):
    """Raised when a generator is asked for a line with fewer than 2 stops."""


class Direction(enum.Enum):
    ASCENDING = "asc"
    DESCENDING = "desc"


class WindowType(enum.Enum):
    EARLIEST_PICKUP = "E"
    LATEST_DROPOFF = "L"


@dataclass(frozen=True)
class TravelMatrix:
    """Pairwise stop-to-stop travel times in minutes; diagonal is the turn time."""

    n: int
    t: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 2:
            raise InvariantError(f"need at least 2 stops, got {self.n}")
        if len(self.t) != self.n or any(len(row) != self.n for row in self.t):
            raise InvariantError(f"matrix must be {self.n}x{self.n}")
        if any(v < 0 for row in self.t for v in row):
            raise InvariantError("travel times must be nonnegative")
        diag = {self.t[i][i] for i in range(self.n)}
        if len(diag) != 1:
            raise InvariantError(f"diagonal entries must all equal the turn time, got {sorted(diag)}")
        for i in range(self.n):
            for k in range(self.n):
                if k == i:
                    continue
                for j in range(self.n):
                    if j == i or j == k:
                        continue
                    if self.t[i][j] > self.t[i][k] + self.t[k][j]:
                        raise InvariantError(
                            f"triangle inequality violated: t[{i + 1}][{j + 1}]={self.t[i][j]}"
                            f" > t[{i + 1}][{k + 1}]+t[{k + 1}][{j + 1}]"
                            f"={self.t[i][k] + self.t[k][j]}"
                        )

    @property
    def t_turn(self) -> int:
        return self.t[0][0]

    def travel(self, i: int, j: int) -> int:
        """Travel time between 1-based stops i and j."""
        return self.t[i - 1][j - 1]


@dataclass(frozen=True)
class Request:
    id: int
    origin: int
    destination: int
    load: int
    window_type: WindowType
    anchor_time: int
    service_time: int

    def __post_init__(self):
        if self.origin == self.destination:
            raise InvariantError(f"request {self.id}: origin equals destination ({self.origin})")
        if self.load <= 0:
            raise InvariantError(f"request {self.id}: load must be positive")
        if self.anchor_time < 0:
            raise InvariantError(f"request {self.id}: anchor time must be nonnegative")
        if self.service_time < 0:
            raise InvariantError(f"request {self.id}: service time must be nonnegative")

    @property
    def direction(self) -> Direction:
        return Direction.ASCENDING if self.origin < self.destination else Direction.DESCENDING


def direction(r: Request) -> Direction:
    """Travel direction of a request along the line."""
    return r.direction


@dataclass(frozen=True)
class FleetSpec:
    kappa: int
    q_max: int
    t_turn: int

    def __post_init__(self):
        if self.kappa < 1:
            raise InvariantError("vehicle count must be >= 1")
        if self.q_max < 1:
            raise InvariantError("capacity must be >= 1")
        if self.t_turn < 0:
            raise InvariantError("turn time must be >= 0")


@dataclass(frozen=True)
class ServiceParams:
    alpha: Fraction
    beta: int
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.alpha < 1:
            raise InvariantError("excess factor alpha must be >= 1")
        if self.beta < 0:
            raise InvariantError("max wait beta must be >= 0")
        if self.horizon <= 0:
            raise InvariantError("horizon must be positive")


@dataclass(frozen=True)
class ObjectiveWeights:
    w_accept: Fraction
    w_dist: Fraction

    def __post_init__(self):
        object.__setattr__(self, "w_accept", Fraction(self.w_accept))
        object.__setattr__(self, "w_dist", Fraction(self.w_dist))
        if self.w_accept < 0 or self.w_dist < 0:
            raise InvariantError("objective weights must be nonnegative")
        if self.w_accept == 0 and self.w_dist == 0:
            raise InvariantError("objective weights must not both be zero")


@dataclass(frozen=True)
class Instance:
    matrix: TravelMatrix
    fleet: FleetSpec
    params: ServiceParams
    weights: ObjectiveWeights
    requests: tuple[Request, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        if self.matrix.t_turn != self.fleet.t_turn:
            raise InvariantError(
                f"matrix diagonal ({self.matrix.t_turn}) disagrees with fleet turn time"
                f" ({self.fleet.t_turn})"
            )
        seen: set[int] = set()
        for r in self.requests:
            if r.id in seen:
                raise InvariantError(f"duplicate request id {r.id}")
            seen.add(r.id)
            for stop in (r.origin, r.destination):
                if not 1 <= stop <= self.n_stops:
                    raise InvariantError(f"request {r.id}: stop {stop} outside 1..{self.n_stops}")

    @property
    def n_stops(self) -> int:
        return self.matrix.n

    def travel(self, i: int, j: int) -> int:
        return self.matrix.travel(i, j)

    def direct_time(self, r: Request) -> int:
        return self.matrix.travel(r.origin, r.destination)

    def with_weights(self, weights: ObjectiveWeights) -> "Instance":
        return Instance(self.matrix, self.fleet, self.params, weights, self.requests)

    def with_t_turn(self, t_turn: int) -> "Instance":
        """Copy with the turn time replaced (used by the DARP comparison)."""
        t = tuple(
            tuple(t_turn if i == j else v for j, v in enumerate(row))
            for i, row in enumerate(self.matrix.t)
        )
        return Instance(
            TravelMatrix(self.matrix.n, t),
            FleetSpec(self.fleet.kappa, self.fleet.q_max, t_turn),
            self.params,
            self.weights,
            self.requests,
        )


def line_metric_matrix(n: int, spacing: int, t_turn: int) -> TravelMatrix:
    """Evenly spaced line: t[i][j] = spacing * |i - j|, diagonal = t_turn."""
    if n < 2:
        raise DegenerateLine(f"need at least 2 stops, got {n}")
    t = tuple(
        tuple(t_turn if i == j else spacing * abs(i - j) for j in range(n)) for i in range(n)
    )
    return TravelMatrix(n, t)


def _format_number(x: Fraction) -> str:
    """Exact text for a rational: integer, terminating decimal, or p/q."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    exp = 0
    while den % 2 == 0:
        den //= 2
        exp += 1
    exp5 = 0
    while den % 5 == 0:
        den //= 5
        exp5 += 1
    if den == 1:
        digits = max(exp, exp5)
        scaled = x * 10**digits
        sign = "-" if scaled < 0 else ""
        num = abs(scaled.numerator)
        whole, frac = divmod(num, 10**digits)
        return f"{sign}{whole}.{str(frac).zfill(digits)}"
    return f"{x.numerator}/{x.denominator}"


def _parse_number(tok: str, line: int) -> Fraction:
    try:
        if "/" in tok:
            return Fraction(tok)
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatSyntaxError(f"bad number {tok!r}: {exc}", line)


def _parse_int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatSyntaxError(f"{what} must be an integer, got {tok!r}", line)


def format_instance(inst: Instance) -> str:
    """Canonical text form; ``parse_instance`` inverts it byte-for-byte."""
    lines = ["LIDARP 1", f"STOPS {inst.n_stops}", "MATRIX"]
    for row in inst.matrix.t:
        lines.append(" ".join(str(v) for v in row))
    lines.append(f"FLEET {inst.fleet.kappa} {inst.fleet.q_max} {inst.fleet.t_turn}")
    lines.append(
        "PARAMS "
        f"{_format_number(inst.params.alpha)} {inst.params.beta} {inst.params.horizon} "
        f"{_format_number(inst.weights.w_accept)} {_format_number(inst.weights.w_dist)}"
    )
    lines.append(f"REQUESTS {len(inst.requests)}")
    for r in inst.requests:
        lines.append(
            f"{r.id} {r.origin} {r.destination} {r.load} {r.window_type.value} "
            f"{r.anchor_time} {r.service_time}"
        )
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    """Parse the LIDARP text format into a validated :class:`Instance`."""
    raw_lines = text.splitlines()
    items: list[tuple[int, list[str]]] = []
    for no, raw in enumerate(raw_lines, start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            items.append((no, body.split()))
    pos = 0

    def take(expect: str | None = None) -> tuple[int, list[str]]:
        nonlocal pos
        if pos >= len(items):
            last = items[-1][0] if items else 1
            raise FormatSyntaxError(f"unexpected end of file, expected {expect or 'more input'}", last)
        item = items[pos]
        pos += 1
        if expect is not None and item[1][0] != expect:
            raise FormatSyntaxError(f"expected {expect!r}, got {item[1][0]!r}", item[0])
        return item

    no, toks = take("LIDARP")
    if toks[1:] != ["1"]:
        raise FormatSyntaxError(f"unsupported format version {toks[1:]}", no)
    no, toks = take("STOPS")
    if len(toks) != 2:
        raise FormatSyntaxError("STOPS takes exactly one value", no)
    n = _parse_int(toks[1], no, "stop count")
    if n < 2:
        raise InvariantError(f"need at least 2 stops, got {n}")
    take("MATRIX")
    rows = []
    for _ in range(n):
        no, toks = take()
        if len(toks) != n:
            raise FormatSyntaxError(f"matrix row must have {n} entries, got {len(toks)}", no)
        rows.append(tuple(_parse_int(tok, no, "travel time") for tok in toks))
    matrix = TravelMatrix(n, tuple(rows))
    no, toks = take("FLEET")
    if len(toks) != 4:
        raise FormatSyntaxError("FLEET takes kappa, q_max, t_turn", no)
    fleet = FleetSpec(*(_parse_int(tok, no, "fleet field") for tok in toks[1:]))
    no, toks = take("PARAMS")
    if len(toks) != 6:
        raise FormatSyntaxError("PARAMS takes alpha, beta, horizon, w_accept, w_dist", no)
    params = ServiceParams(
        _parse_number(toks[1], no),
        _parse_int(toks[2], no, "beta"),
        _parse_int(toks[3], no, "horizon"),
    )
    weights = ObjectiveWeights(_parse_number(toks[4], no), _parse_number(toks[5], no))
    no, toks = take("REQUESTS")
    if len(toks) != 2:
        raise FormatSyntaxError("REQUESTS takes exactly one value", no)
    m = _parse_int(toks[1], no, "request count")
    requests = []
    for _ in range(m):
        no, toks = take()
        if len(toks) != 7:
            raise FormatSyntaxError(f"request line must have 7 fields, got {len(toks)}", no)
        try:
            wtype = WindowType(toks[4])
        except ValueError:
            raise FormatSyntaxError(f"window type must be E or L, got {toks[4]!r}", no)
        requests.append(
            Request(
                id=_parse_int(toks[0], no, "request id"),
                origin=_parse_int(toks[1], no, "origin"),
                destination=_parse_int(toks[2], no, "destination"),
                load=_parse_int(toks[3], no, "load"),
                window_type=wtype,
                anchor_time=_parse_int(toks[5], no, "anchor time"),
                service_time=_parse_int(toks[6], no, "service time"),
            )
        )
    if pos != len(items):
        raise FormatSyntaxError("trailing content after last request", items[pos][0])
    return Instance(matrix, fleet, params, weights, tuple(requests))


DEFAULT_ALPHA = Fraction(3)
DEFAULT_BETA = 15
DEFAULT_HORIZON = 480
DEFAULT_SERVICE_TIME = 3
DEFAULT_T_TURN = 3
DEFAULT_WEIGHTS = ObjectiveWeights(Fraction(10), Fraction(1))


def default_params(horizon: int = DEFAULT_HORIZON) -> ServiceParams:
    return ServiceParams(DEFAULT_ALPHA, DEFAULT_BETA, horizon)


def generate_instance(
    seed: int,
    n_stops: int,
    m_requests: int,
    kappa: int,
    q_max: int,
    matrix: TravelMatrix,
    params: ServiceParams | None = None,
    weights: ObjectiveWeights = DEFAULT_WEIGHTS,
    load: int = 1,
    service_time: int = DEFAULT_SERVICE_TIME,
) -> Instance:
    """Draw a synthetic instance: uniform stops (redraw on origin=destination),
    an even split of window types, and uniform integer anchor times."""
    if n_stops < 2:
        raise DegenerateLine(f"need at least 2 stops, got {n_stops}")
    if m_requests < 1:
        raise InvariantError("need at least one request")
    if matrix.n != n_stops:
        raise InvariantError(f"matrix is {matrix.n}x{matrix.n}, expected {n_stops}")
    if params is None:
        params = default_params()
    rng = random.Random(seed)
    n_early = (m_requests + 1) // 2
    requests = []
    for rid in range(1, m_requests + 1):
        o = rng.randint(1, n_stops)
        d = rng.randint(1, n_stops)
        while d == o:
            d = rng.randint(1, n_stops)
        wtype = WindowType.EARLIEST_PICKUP if rid <= n_early else WindowType.LATEST_DROPOFF
        anchor = rng.randint(0, params.horizon)
        requests.append(Request(rid, o, d, load, wtype, anchor, service_time))
    fleet = FleetSpec(kappa, q_max, matrix.t_turn)
    return Instance(matrix, fleet, params, weights, tuple(requests))
