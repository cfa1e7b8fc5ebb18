"""Additive circle-valued cocycles on fixed covers of three base surfaces.

The covers are frozen models rather than general simplicial machinery:

* ``S1``: two arcs whose overlap has an east and a west component,
* ``S2``: two polar caps overlapping in an equatorial annulus, sampled along
  the equator circle,
* ``T2``: four half-by-half squares; adjacent squares meet along strip
  centerlines and diagonal squares meet at the four corner points, which is
  also where all triple overlaps live.

Transition data is a circle-valued sample array per overlap slot.  Sample
points that several slots share, the torus corners, are registered once per
chart so that 0-cochains are genuine functions on chart samples and the
coboundary action is algebraically exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circle_diffeo import winding_number
from .errors import GridMismatch, InvalidEuler, UnsupportedBase

__all__ = [
    "ModelCover",
    "Cochain0",
    "Cocycle1",
    "ClassRecord",
    "model_cover",
    "zero_cocycle",
    "clutching_cocycle",
    "random_cocycle_values",
    "random_cochain",
    "cocycle_check",
    "coboundary_act",
    "stabilizes",
    "euler_class",
    "classify",
    "cocycle_to_json",
    "cocycle_from_json",
]

SUPPORTED_BASES = ("S1", "S2", "T2")


def circle_dist(a, b=0.0):
    """Distance on R/Z, vectorized."""
    d = (np.asarray(a, dtype=float) - b + 0.5) % 1.0 - 0.5
    return np.abs(d)


@dataclass(frozen=True)
class OverlapSlot:
    i: int
    j: int
    positions: np.ndarray          # (m,) angles or (m, 2) torus points
    i_index: np.ndarray            # sample -> index into chart i's sample list
    j_index: np.ndarray

    @property
    def size(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class TripleEntry:
    """One sample point of a triple overlap, with its three pair lookups."""

    charts: tuple[int, int, int]
    ij: tuple[int, int]            # (slot index, sample index) for tau_ij
    jk: tuple[int, int]
    ik: tuple[int, int]


@dataclass(frozen=True, eq=False)
class ModelCover:
    base: str
    n_charts: int
    slots: tuple[OverlapSlot, ...]
    chart_samples: tuple[np.ndarray, ...]
    triples: tuple[TripleEntry, ...]

    def slot_pairs(self) -> list[tuple[int, int]]:
        return [(s.i, s.j) for s in self.slots]

    def compatible_with(self, other: "ModelCover") -> bool:
        return (
            self is other
            or (
                self.base == other.base
                and self.slot_pairs() == other.slot_pairs()
                and [s.size for s in self.slots] == [s.size for s in other.slots]
            )
        )


def _poskey(p) -> tuple:
    arr = np.atleast_1d(np.asarray(p, dtype=float)) % 1.0
    return tuple(round(float(v), 10) % 1.0 for v in arr)


class _Registry:
    """Assigns stable per-chart indices to shared sample positions."""

    def __init__(self, n_charts: int):
        self.samples: list[list] = [[] for _ in range(n_charts)]
        self.lookup: list[dict] = [{} for _ in range(n_charts)]

    def index(self, chart: int, pos) -> int:
        key = _poskey(pos)
        table = self.lookup[chart]
        if key not in table:
            table[key] = len(self.samples[chart])
            self.samples[chart].append(np.atleast_1d(np.asarray(pos, float)) % 1.0)
        return table[key]

    def indices(self, chart: int, positions) -> np.ndarray:
        return np.array([self.index(chart, p) for p in positions], dtype=int)

    def arrays(self) -> tuple[np.ndarray, ...]:
        out = []
        for s in self.samples:
            arr = np.array(s)
            out.append(arr[:, 0] if arr.shape[1] == 1 else arr)
        return tuple(out)


def _cover_s1(m: int) -> ModelCover:
    # Arcs (-0.05, 0.55) and (0.45, 1.05); overlap components near 0.5 and 0.
    east = np.linspace(0.45, 0.55, m)
    west = np.linspace(0.95, 1.05, m) % 1.0
    positions = np.concatenate([east, west])
    reg = _Registry(2)
    slot = OverlapSlot(
        0, 1, positions, reg.indices(0, positions), reg.indices(1, positions)
    )
    return ModelCover("S1", 2, (slot,), reg.arrays(), ())


def _cover_s2(m: int) -> ModelCover:
    # Two caps; the annular overlap is sampled along the closed equator.
    theta = np.arange(m) / m
    reg = _Registry(2)
    slot = OverlapSlot(0, 1, theta, reg.indices(0, theta), reg.indices(1, theta))
    return ModelCover("S2", 2, (slot,), reg.arrays(), ())


_T2_CORNERS = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5))


def _t2_segment(x_fixed, y_range, m, vertical=True):
    t = np.linspace(y_range[0], y_range[1], m)
    if vertical:
        return np.column_stack([np.full(m, x_fixed), t % 1.0])
    return np.column_stack([t % 1.0, np.full(m, x_fixed)])


def _cover_t2(m: int) -> ModelCover:
    corners = np.array(_T2_CORNERS)
    seg = _t2_segment
    components = {
        (0, 1): np.vstack([seg(0.5, (0.0, 0.5), m), seg(0.0, (0.0, 0.5), m)]),
        (0, 2): np.vstack(
            [seg(0.5, (0.0, 0.5), m, vertical=False), seg(0.0, (0.0, 0.5), m, vertical=False)]
        ),
        (0, 3): corners,
        (1, 2): corners,
        (1, 3): np.vstack(
            [seg(0.5, (0.5, 1.0), m, vertical=False), seg(0.0, (0.5, 1.0), m, vertical=False)]
        ),
        (2, 3): np.vstack([seg(0.5, (0.5, 1.0), m), seg(0.0, (0.5, 1.0), m)]),
    }
    reg = _Registry(4)
    slots = []
    slot_of_pair = {}
    for pair in sorted(components):
        pos = components[pair] % 1.0
        i, j = pair
        slots.append(
            OverlapSlot(i, j, pos, reg.indices(i, pos), reg.indices(j, pos))
        )
        slot_of_pair[pair] = len(slots) - 1

    # Sample index of a given corner inside a given slot.
    def locate(pair, corner):
        s = slot_of_pair[pair]
        keys = [_poskey(p) for p in slots[s].positions]
        return s, keys.index(_poskey(corner))

    triples = []
    for (i, j, k) in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        for corner in _T2_CORNERS:
            triples.append(
                TripleEntry(
                    (i, j, k),
                    ij=locate((i, j), corner),
                    jk=locate((j, k), corner),
                    ik=locate((i, k), corner),
                )
            )
    return ModelCover("T2", 4, tuple(slots), reg.arrays(), tuple(triples))


def model_cover(base: str, m: int = 64) -> ModelCover:
    """Fixed cover of one of the three model bases, with m samples per
    overlap component."""
    if base == "S1":
        return _cover_s1(m)
    if base == "S2":
        return _cover_s2(m)
    if base == "T2":
        return _cover_t2(m)
    raise UnsupportedBase(f"no model cover for base {base!r}")


@dataclass
class Cochain0:
    """Circle-valued function per chart, sampled on the chart's registry."""

    cover: ModelCover
    values: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.values) != self.cover.n_charts:
            raise GridMismatch("one value array per chart required")
        vals = []
        for i, v in enumerate(self.values):
            v = np.asarray(v, dtype=float) % 1.0
            want = len(self.cover.chart_samples[i])
            if v.shape != (want,):
                raise GridMismatch(
                    f"chart {i} expects {want} samples, got {v.shape}"
                )
            vals.append(v)
        self.values = vals

    def __add__(self, other: "Cochain0") -> "Cochain0":
        if not self.cover.compatible_with(other.cover):
            raise GridMismatch("cochains live on different covers")
        return Cochain0(
            self.cover, [(a + b) % 1.0 for a, b in zip(self.values, other.values)]
        )


@dataclass
class Cocycle1:
    """Circle-valued transition samples, one array per overlap slot."""

    cover: ModelCover
    values: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.values) != len(self.cover.slots):
            raise GridMismatch("one value array per overlap slot required")
        vals = []
        for s, v in zip(self.cover.slots, self.values):
            v = np.asarray(v, dtype=float) % 1.0
            if v.shape != (s.size,):
                raise GridMismatch(
                    f"overlap ({s.i},{s.j}) expects {s.size} samples, got {v.shape}"
                )
            vals.append(v)
        self.values = vals


def zero_cocycle(cover: ModelCover) -> Cocycle1:
    return Cocycle1(cover, [np.zeros(s.size) for s in cover.slots])


def clutching_cocycle(
    cover: ModelCover, degree: int, perturbation: float = 0.0, phase: float = 0.0
) -> Cocycle1:
    """Degree-d clutching data on the two-cap sphere cover.

    tau(theta) = d*theta + perturbation*sin(2 pi theta + phase), mod 1.
    """
    if cover.base != "S2":
        raise UnsupportedBase("clutching data needs the two-cap sphere cover")
    theta = cover.slots[0].positions
    vals = degree * theta + perturbation * np.sin(2 * np.pi * theta + phase)
    return Cocycle1(cover, [vals % 1.0])


def random_cocycle_values(cover: ModelCover, rng: np.random.Generator) -> Cocycle1:
    """Independent uniform angles per slot sample; generically not a cocycle."""
    return Cocycle1(cover, [rng.uniform(0, 1, s.size) for s in cover.slots])


def _smooth_angles(points: np.ndarray, rng: np.random.Generator, amp: float) -> np.ndarray:
    pts = points[:, None] if points.ndim == 1 else points
    vals = np.full(pts.shape[0], rng.uniform())
    for axis in range(pts.shape[1]):
        for k in (1, 2):
            a, b = rng.normal(size=2) * amp / k
            vals = vals + a * np.cos(2 * np.pi * k * pts[:, axis])
            vals = vals + b * np.sin(2 * np.pi * k * pts[:, axis])
    return vals % 1.0


def random_cochain(
    cover: ModelCover, rng: np.random.Generator, amp: float = 0.05
) -> Cochain0:
    """Smooth random 0-cochain.

    Chart functions are trigonometric in the sample coordinates with no
    linear term, so cap restrictions on the sphere cover never wind; that is
    the discrete shadow of extendability over the cap.
    """
    values = [
        _smooth_angles(np.asarray(cover.chart_samples[i], dtype=float), rng, amp)
        for i in range(cover.n_charts)
    ]
    return Cochain0(cover, values)


def cocycle_check(tau: Cocycle1) -> float:
    """Max circle deviation of tau_ij + tau_jk - tau_ik over triple samples.

    Covers without triple overlaps (both two-chart models) return zero.
    """
    cover = tau.cover
    if not cover.triples:
        return 0.0
    worst = 0.0
    for entry in cover.triples:
        t_ij = tau.values[entry.ij[0]][entry.ij[1]]
        t_jk = tau.values[entry.jk[0]][entry.jk[1]]
        t_ik = tau.values[entry.ik[0]][entry.ik[1]]
        worst = max(worst, float(circle_dist(t_ij + t_jk - t_ik)))
    return worst


def coboundary_act(tau: Cocycle1, kappa: Cochain0) -> Cocycle1:
    """Gauge action tau_ij -> -kappa_i + tau_ij + kappa_j, slotwise mod 1."""
    if not kappa.cover.compatible_with(tau.cover):
        raise GridMismatch("cochain and cocycle live on different covers")
    out = []
    for slot, vals in zip(tau.cover.slots, tau.values):
        ki = kappa.values[slot.i][slot.i_index]
        kj = kappa.values[slot.j][slot.j_index]
        out.append((vals - ki + kj) % 1.0)
    return Cocycle1(tau.cover, out)


def stabilizes(kappa: Cochain0, tau: Cocycle1, tol: float = 1e-9) -> bool:
    """Whether the gauge action of kappa moves tau by less than tol."""
    acted = coboundary_act(tau, kappa)
    worst = 0.0
    for a, b in zip(acted.values, tau.values):
        worst = max(worst, float(circle_dist(a - b).max()))
    return worst < tol


def euler_class(tau: Cocycle1) -> int:
    """Winding of the transition data along the closed equator (sphere cover)."""
    if tau.cover.base != "S2":
        raise UnsupportedBase(
            f"euler class is read off the sphere cover, not {tau.cover.base!r}"
        )
    vals = tau.values[0]
    closed = np.append(vals, vals[0])
    return winding_number(closed)


@dataclass(frozen=True)
class ClassRecord:
    """Total space and core description for a classified fibering."""

    base: str
    euler: int
    total_space: str
    core: str

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "euler": self.euler,
            "total_space": self.total_space,
            "core": self.core,
        }


def classify(base: str, euler: int) -> ClassRecord:
    """Total space and core of the oriented circle fibering with this data.

    Cores are reported as fixed descriptor strings: primitive lattice classes
    for torus total spaces, a two-sphere pair or point pair for lens spaces,
    a point pair for higher mapping tori, and the non-finite-dimensional
    marker for the untwisted sphere product.
    """
    euler = int(euler)
    if base == "S1":
        if euler != 0:
            raise InvalidEuler("fiberings over the circle carry no twisting class")
        return ClassRecord(base, 0, "T2", "Zprim2")
    if base == "S2":
        if euler == 0:
            return ClassRecord(base, 0, "S2 x S1", "non-finite-dimensional")
        e = abs(euler)
        core = "S2 ⊔ S2" if e in (1, 2) else "S0"
        return ClassRecord(base, euler, f"L({e},1)", core)
    if base == "T2":
        if euler == 0:
            return ClassRecord(base, 0, "T3", "Zprim3")
        return ClassRecord(base, euler, f"MT_{abs(euler)}", "S0")
    raise UnsupportedBase(f"no classification for base {base!r}")


# --- wire format -------------------------------------------------------------


def cocycle_to_json(tau: Cocycle1) -> str:
    overlaps = [
        {"i": s.i, "j": s.j, "samples": [float(v) for v in vals]}
        for s, vals in zip(tau.cover.slots, tau.values)
    ]
    return json.dumps({"base": tau.cover.base, "overlaps": overlaps}, sort_keys=True)


def cocycle_from_json(text: str) -> Cocycle1:
    try:
        doc = json.loads(text)
        base = doc["base"]
        overlaps = doc["overlaps"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise GridMismatch(f"malformed cocycle document: {exc}") from exc
    if base not in SUPPORTED_BASES:
        raise UnsupportedBase(f"no model cover for base {base!r}")

    sizes = {}
    for entry in overlaps:
        try:
            pair = (int(entry["i"]), int(entry["j"]))
            sizes[pair] = len(entry["samples"])
        except (KeyError, TypeError) as exc:
            raise GridMismatch(f"malformed overlap entry: {exc}") from exc

    if base == "S1":
        if set(sizes) != {(0, 1)} or sizes[(0, 1)] % 2:
            raise GridMismatch("circle cover wants one (0,1) overlap of even size")
        cover = model_cover("S1", sizes[(0, 1)] // 2)
    elif base == "S2":
        if set(sizes) != {(0, 1)}:
            raise GridMismatch("sphere cover wants exactly one (0,1) overlap")
        cover = model_cover("S2", sizes[(0, 1)])
    else:
        segment_pairs = {(0, 1), (0, 2), (1, 3), (2, 3)}
        want = segment_pairs | {(0, 3), (1, 2)}
        if set(sizes) != want:
            raise GridMismatch(f"torus cover wants overlaps {sorted(want)}")
        seg_sizes = {sizes[p] for p in segment_pairs}
        if len(seg_sizes) != 1 or next(iter(seg_sizes)) % 2:
            raise GridMismatch("torus strip overlaps must share one even size")
        if sizes[(0, 3)] != 4 or sizes[(1, 2)] != 4:
            raise GridMismatch("torus corner overlaps carry exactly four samples")
        cover = model_cover("T2", next(iter(seg_sizes)) // 2)

    by_pair = {(int(e["i"]), int(e["j"])): np.asarray(e["samples"], float) for e in overlaps}
    return Cocycle1(cover, [by_pair[(s.i, s.j)] for s in cover.slots])
