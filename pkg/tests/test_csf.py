import numpy as np
import pytest

from fiberlab.csf import (
    CurveState,
    FlowRecord,
    _Stack,
    _audit_fibering,
    auto_dt,
    csf_step,
    curvature,
    flow_fibering,
    flow_until,
    resample,
    self_intersection_check,
)
from fiberlab.errors import (
    BadConfig,
    CFLViolation,
    DegenerateSpacing,
    DisjointnessLost,
    SelfIntersection,
    TimeBudgetExceeded,
    UnsupportedBase,
)
from fiberlab.moduli import Fibering, model_fibering, slope


def circle(radius=0.2, m=128, center=(0.5, 0.5)):
    t = 2 * np.pi * np.arange(m) / m
    pts = np.stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)],
                   axis=-1)
    return CurveState(pts, np.zeros(2))


def tilted_line(p=1, q=2, m=128, amp=0.0, x0=0.15):
    t = np.arange(m) / m
    pts = np.stack([x0 + p * t + amp * np.sin(2 * np.pi * t),
                    q * t + amp * np.cos(2 * np.pi * t)], axis=-1)
    return CurveState(pts, np.array([p, q]))


def naive_step(points, closure, dt):
    """Reference explicit step with scalar indexing, no vectorization."""
    m = len(points)
    out = points.copy()
    for i in range(m):
        prev = points[i - 1] - (closure if i == 0 else 0.0)
        nxt = points[(i + 1) % m] + (closure if i == m - 1 else 0.0)
        d1 = points[i] - prev
        d2 = nxt - points[i]
        h1 = np.linalg.norm(d1)
        h2 = np.linalg.norm(d2)
        g2 = 2.0 * (d2 / h2 - d1 / h1) / (h1 + h2)
        chord = nxt - prev
        tangent = chord / np.linalg.norm(chord)
        k = g2 - (g2 @ tangent) * tangent
        out[i] = points[i] + dt * k
    return out


# --- lifting ------------------------------------------------------------------------


def test_from_wrapped_reads_closure():
    t = np.arange(64) / 64
    wrapped = np.stack([(0.3 + t) % 1.0, (2 * t) % 1.0], axis=-1)
    state = CurveState.from_wrapped(wrapped)
    assert tuple(state.closure) == (1, 2)
    assert np.allclose(state.wrapped(), wrapped, atol=1e-12)
    diffs = np.diff(state.points[:, 1])
    assert np.all(diffs > 0)


def test_from_wrapped_rejects_undersampled():
    t = np.arange(8) / 8
    wrapped = np.stack([(4 * t) % 1.0, t], axis=-1)
    with pytest.raises(DegenerateSpacing):
        CurveState.from_wrapped(wrapped)


def test_curve_state_validation():
    with pytest.raises(BadConfig):
        CurveState(np.zeros((16, 3)), np.zeros(2))
    with pytest.raises(DegenerateSpacing):
        CurveState(np.zeros((4, 2)), np.zeros(2))
    with pytest.raises(BadConfig):
        CurveState(np.zeros((16, 2)), np.array([0.5, 0.0]))


# --- curvature ------------------------------------------------------------------------


def test_circle_curvature_closed_form():
    radius = 0.2
    state = circle(radius=radius, m=256)
    kvec, kappa = curvature(state)
    assert np.allclose(kappa, 1.0 / radius, rtol=2e-3)
    inward = np.array([0.5, 0.5]) - state.points
    inward /= np.linalg.norm(inward, axis=1, keepdims=True)
    unit = kvec / np.linalg.norm(kvec, axis=1, keepdims=True)
    assert np.allclose(unit, inward, atol=1e-10)


def test_clockwise_circle_flips_sign():
    state = circle(m=128)
    rev = CurveState(state.points[::-1].copy(), state.closure)
    _, kappa = curvature(rev)
    assert np.all(kappa < 0)
    assert np.allclose(kappa, -5.0, rtol=2e-3)


def test_straight_line_is_stationary():
    state = tilted_line(1, 2, m=64)
    kvec, kappa = curvature(state)
    assert np.max(np.abs(kvec)) < 1e-10
    stepped = csf_step(state, auto_dt(state))
    assert np.allclose(stepped.points, state.points, atol=1e-12)


def test_step_matches_naive_oracle(rng):
    state = tilted_line(1, 2, m=48, amp=0.05)
    dt = auto_dt(state, cfl=0.1)
    got = csf_step(state, dt)
    want = naive_step(state.points, state.closure.astype(float), dt)
    assert np.allclose(got.points, want, atol=1e-14)


def test_cfl_guard():
    state = circle(m=64)
    with pytest.raises(CFLViolation):
        csf_step(state, 1.0)
    with pytest.raises(CFLViolation):
        auto_dt(state, cfl=0.7)


# --- resampling and embeddedness ----------------------------------------------------------


def test_resample_uniformizes():
    state = tilted_line(0, 1, m=96, amp=0.04)
    out = resample(state)
    sp = out.spacings()
    assert sp.max() / sp.min() - 1 < 1e-3
    assert tuple(out.closure) == (0, 1)
    assert abs(out.length() - state.length()) < 1e-4
    denser = resample(state, m=192)
    assert denser.m == 192
    assert abs(denser.length() - state.length()) < 1e-4


def test_self_intersection_check():
    state = circle(m=64)
    self_intersection_check(state)
    # drag one sample next to the diametrically opposite one
    pinched = state.points.copy()
    pinched[0] = pinched[32] + np.array([1e-4, 0.0])
    with pytest.raises(SelfIntersection):
        self_intersection_check(CurveState(pinched, np.zeros(2)))


# --- single-curve flows -------------------------------------------------------------------


def test_shrinking_circle_benchmark():
    r0, t_final = 0.25, 0.02
    state = circle(radius=r0, m=128)
    final, records = flow_until(state, t_final, record_every=200)
    radii = np.linalg.norm(final.points - np.array([0.5, 0.5]), axis=1)
    expected = np.sqrt(r0 * r0 - 2 * t_final)
    assert abs(radii.mean() - expected) / expected < 1e-2
    assert radii.std() < 1e-3
    lengths = [r.length for r in records]
    assert all(b <= a + 1e-12 for a, b in zip(lengths, lengths[1:]))
    assert records[-1].max_kappa > records[0].max_kappa
    assert isinstance(records[0], FlowRecord)


def test_wiggly_line_decays():
    state = tilted_line(0, 1, m=96, amp=0.03)
    _, k0 = curvature(state)
    final, _ = flow_until(state, 0.2)
    _, k1 = curvature(final)
    assert np.max(np.abs(k0)) > 1.0
    assert np.max(np.abs(k1)) < 1e-3
    assert tuple(final.closure) == (0, 1)


def test_flow_time_budget():
    state = circle(m=64)
    with pytest.raises(TimeBudgetExceeded):
        flow_until(state, 0.01, max_steps=10)


# --- stacked fibering flows ------------------------------------------------------------------


def perturbed_fibering(nb=4, m=64, amp=0.015):
    base = model_fibering("flat2", nb, m)
    fibers = base.fibers.copy()
    phases = 2 * np.pi * np.arange(nb) / nb
    y = fibers[..., 1]
    fibers[..., 0] = (
        fibers[..., 0] + amp * np.sin(2 * np.pi * y + phases[:, None])
    ) % 1.0
    return Fibering("flat2", fibers)


def test_flow_fibering_smooths_and_keeps_slope():
    fib = perturbed_fibering()
    out, records = flow_fibering(fib, 0.1, record_every=300)
    assert out.fibers.shape == fib.fibers.shape
    assert slope(out) == (0, 1)
    # wavelength-one graph perturbations relax like exp(-4 pi^2 t)
    final_k = records[-1].max_kappa
    assert final_k < 0.05 * records[0].max_kappa
    assert out.min_separation() > fib.threshold


def test_flow_fibering_needs_flat2():
    with pytest.raises(UnsupportedBase):
        flow_fibering(model_fibering("flat3", 4, 16), 0.01)


def test_audit_flags_contrived_violations():
    """The kd audit is a safety net for discrete steps; exercise it directly."""
    fib = perturbed_fibering(nb=4, m=64)
    curves = [CurveState.from_wrapped(row) for row in fib.fibers]
    stack = _Stack(curves)
    stack.compute()
    with pytest.raises(DisjointnessLost) as info:
        _audit_fibering(stack, threshold=0.24, step=7)
    assert info.value.step == 7
    # collapse two samples of one fiber onto a nearby-but-nonadjacent pair
    pinch = fib.fibers.copy()
    pinch[0, 10] = pinch[0, 15] + 1e-5
    curves = [CurveState.from_wrapped(row) for row in pinch]
    stack = _Stack(curves)
    stack.compute()
    with pytest.raises(SelfIntersection):
        _audit_fibering(stack, threshold=1e-9, step=1)


def test_flow_fibering_records_have_times():
    fib = perturbed_fibering(nb=3, m=48)
    _, records = flow_fibering(fib, 0.01, record_every=100)
    times = [r.t for r in records]
    assert times == sorted(times)
    assert times[-1] == pytest.approx(0.01)
