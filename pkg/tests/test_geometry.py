import numpy as np
import pytest
from hypothesis import given, strategies as st

from fiberlab import geometry
from fiberlab.errors import (
    BaseMismatch,
    BeyondInjectivityRadius,
    NotTangent,
    UnsupportedBase,
)
from fiberlab.geometry import get_model, qconj, qmul, qnormalize, quat_exp_i

ALL_MODELS = ["flat2", "flat3", "hopf", "lens2", "lens3"]


def fd_dproj(model, p, w, eps=1e-6):
    """Central-difference oracle for the differential of the projection."""
    if model.name.startswith("flat"):
        plus = model.project(np.asarray(p) + eps * w)
        minus = model.project(np.asarray(p) - eps * w)
        d = (plus - minus + 0.5) % 1.0 - 0.5
        return d / (2 * eps)
    plus = model.project(qnormalize(np.asarray(p) + eps * w))
    minus = model.project(qnormalize(np.asarray(p) - eps * w))
    return (plus - minus) / (2 * eps)


def random_tangent(model, rng, p):
    w = rng.normal(size=model.ambient_dim)
    return model.tangent_project(p, w)


def safe_base_step(model, rng, x, scale=1.0):
    """A base tangent short enough to stay inside the model's geodesic guard."""
    v = model.base_tangent_project(x, rng.normal(size=model.base_ambient_dim))
    v /= np.linalg.norm(v)
    return v * scale * (0.3 if model.name.startswith("flat") else 1.0)


# --- quaternion helpers ---------------------------------------------------------


def test_qmul_matches_scalar_expansion(rng):
    a = rng.normal(size=4)
    b = rng.normal(size=4)
    w1, v1 = a[0], a[1:]
    w2, v2 = b[0], b[1:]
    expected = np.concatenate(
        [[w1 * w2 - v1 @ v2], w1 * v2 + w2 * v1 + np.cross(v1, v2)]
    )
    assert np.allclose(qmul(a, b), expected, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_qmul_associative_and_norm_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.normal(size=(3, 4))
    left = qmul(qmul(a, b), c)
    right = qmul(a, qmul(b, c))
    assert np.allclose(left, right, atol=1e-10)
    assert np.isclose(
        np.linalg.norm(qmul(a, b)), np.linalg.norm(a) * np.linalg.norm(b)
    )


def test_qconj_reverses_products(rng):
    a, b = rng.normal(size=(2, 4))
    assert np.allclose(qconj(qmul(a, b)), qmul(qconj(b), qconj(a)), atol=1e-12)


def test_quat_exp_i_group_law():
    th = np.array([0.3, 1.1])
    prod = qmul(quat_exp_i(th[0]), quat_exp_i(th[1]))
    assert np.allclose(prod, quat_exp_i(th.sum()), atol=1e-15)


# --- projection and its differential ----------------------------------------------


def test_hopf_projection_lands_on_unit_sphere(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    x = model.project(p)
    assert np.isclose(np.linalg.norm(x), 1.0, atol=1e-12)


def test_projection_constant_on_fibers(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        p = model.random_point(rng)
        shifted = model.fiber_shift(p, 0.37 * model.fiber_period)
        assert np.allclose(model.project(shifted), model.project(p), atol=1e-12)


def test_section_is_a_section(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        for _ in range(20):
            x = model.random_base(rng)
            assert np.allclose(model.project(model.section(x)), x, atol=1e-12)


def test_hopf_section_singularity():
    model = get_model("hopf")
    with pytest.raises(BaseMismatch):
        model.section(np.array([-1.0, 0.0, 0.0]))


@pytest.mark.parametrize("name", ALL_MODELS)
def test_dproj_matches_finite_differences(name, rng):
    model = get_model(name)
    for _ in range(50):
        p = model.random_point(rng)
        w = random_tangent(model, rng, p)
        got = model.dproj(p, w)
        want = fd_dproj(model, p, w)
        assert np.allclose(got, want, atol=1e-5 * max(1.0, np.linalg.norm(want)))


def test_dproj_kills_vertical_exactly(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        p = model.random_point(rng)
        assert np.allclose(model.dproj(p, model.vertical_unit(p)), 0.0, atol=1e-12)


def test_dproj_batched(rng):
    model = get_model("hopf")
    p = qnormalize(rng.normal(size=(7, 4)))
    w = np.stack([model.tangent_project(pi, rng.normal(size=4)) for pi in p])
    batched = model.dproj(p, w)
    for k in range(7):
        assert np.allclose(batched[k], model.dproj(p[k], w[k]), atol=1e-14)


# --- tangent splitting -------------------------------------------------------------


@pytest.mark.parametrize("name", ALL_MODELS)
def test_split_tangent_reassembles(name, rng):
    model = get_model(name)
    p = model.random_point(rng)
    w = random_tangent(model, rng, p)
    split = model.split_tangent(p, w)
    assert np.allclose(split.vertical + split.horizontal, w, atol=1e-12)
    assert np.isclose(
        model.total_inner(p, split.vertical, split.horizontal), 0.0, atol=1e-12
    )
    vu = model.vertical_unit(p)
    coef = model.total_inner(p, w, vu)
    assert np.allclose(split.vertical, coef * vu, atol=1e-12)


def test_split_tangent_rejects_radial_vectors(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    with pytest.raises(NotTangent):
        model.split_tangent(p, p * 0.5)


def test_submersion_norm_identity(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        for _ in range(100):
            p = model.random_point(rng)
            w = random_tangent(model, rng, p)
            h = model.split_tangent(p, w).horizontal
            hn = model.total_norm(p, h)
            bn = model.base_norm(model.project(p), model.dproj(p, h))
            assert np.isclose(bn, hn, rtol=1e-10, atol=1e-12)


# --- horizontal lifts -----------------------------------------------------------------


@pytest.mark.parametrize("name", ALL_MODELS)
def test_lift_inverts_dproj(name, rng):
    model = get_model(name)
    for _ in range(30):
        p = model.random_point(rng)
        x = model.project(p)
        v = model.base_tangent_project(x, rng.normal(size=model.base_ambient_dim))
        lift = model.horizontal_lift_vec(p, v)
        assert np.allclose(model.dproj(p, lift.vector), v, atol=1e-10)
        assert np.isclose(
            model.total_inner(p, lift.vector, model.vertical_unit(p)), 0.0, atol=1e-10
        )
        w = random_tangent(model, rng, p)
        h = model.split_tangent(p, w).horizontal
        relift = model.horizontal_lift_vec(p, model.dproj(p, h))
        assert np.allclose(relift.vector, h, atol=1e-10)


def test_lift_rejects_nontangent_base_vector(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    x = model.project(p)
    with pytest.raises(BaseMismatch):
        model.horizontal_lift_vec(p, x * 0.3)


# --- base geodesics -------------------------------------------------------------------


def test_sphere_geodesic_closed_form(rng):
    model = get_model("hopf")
    for _ in range(30):
        x = model.random_base(rng)
        v = model.random_base_tangent(rng, x)
        v *= rng.uniform(0.1, 2.5) / np.linalg.norm(v)
        y = model.base_geodesic(x, v, 1.0)
        assert np.isclose(np.linalg.norm(y), 1.0, atol=1e-12)
        assert np.isclose(model.base_distance(x, y), np.linalg.norm(v), atol=1e-10)
        back = model.base_log(x, y)
        assert np.allclose(back, v, atol=1e-10)


def test_geodesic_reversal(rng):
    model = get_model("hopf")
    x = model.random_base(rng)
    v = model.random_base_tangent(rng, x)
    assert np.allclose(
        model.base_geodesic(x, v, -0.4), model.base_geodesic(x, -v, 0.4), atol=1e-12
    )


def test_flat_geodesic_wraps(rng):
    model = get_model("flat3")
    x = np.array([0.9, 0.2])
    v = np.array([0.3, -0.3])
    y = model.base_geodesic(x, v, 1.0)
    assert np.allclose(y, [0.2, 0.9], atol=1e-12)
    assert np.allclose(model.base_log(x, y), v, atol=1e-12)


def test_geodesic_guard():
    model = get_model("hopf")
    x = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 3.0, 0.0])
    with pytest.raises(BeyondInjectivityRadius):
        model.base_geodesic(x, v, 1.0)
    flat = get_model("flat2")
    with pytest.raises(BeyondInjectivityRadius):
        flat.base_geodesic(np.array([0.0]), np.array([0.5]), 1.0)


# --- horizontal transport ----------------------------------------------------------------


@pytest.mark.parametrize("name", ALL_MODELS)
def test_transport_endpoint_on_target_fiber(name, rng):
    model = get_model(name)
    for _ in range(5):
        p = model.random_point(rng)
        x = model.project(p)
        v = safe_base_step(model, rng, x, scale=0.9)
        xt = model.base_geodesic(x, v, 1.0)
        out = model.horizontal_transport(p, xt)
        assert model.base_distance(model.project(out), xt) < 1e-9


def test_transport_path_is_horizontal(rng):
    """Finite-difference check that the transported point moves horizontally."""
    model = get_model("hopf")
    p = model.random_point(rng)
    x = model.project(p)
    v = model.random_base_tangent(rng, x)
    v *= 1.2 / np.linalg.norm(v)
    delta = 1e-4

    def at(s):
        return model.horizontal_transport(p, model.base_geodesic(x, v, s))

    mid = at(0.5)
    rate = (at(0.5 + delta) - at(0.5 - delta)) / (2 * delta)
    speed = np.linalg.norm(rate)
    assert np.isclose(speed, np.linalg.norm(v) / 2.0, rtol=1e-3)
    vert = np.dot(rate, model.vertical_unit(mid))
    assert abs(vert) < 1e-4 * speed
    radial = np.dot(rate, mid)
    assert abs(radial) < 1e-4 * speed


def test_transport_commutes_with_fiber_rotation(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    x = model.project(p)
    v = model.random_base_tangent(rng, x)
    v *= 1.0 / np.linalg.norm(v)
    xt = model.base_geodesic(x, v, 1.0)
    theta = 1.234
    a = model.horizontal_transport(model.fiber_shift(p, theta), xt)
    b = model.fiber_shift(model.horizontal_transport(p, xt), theta)
    assert np.allclose(a, b, atol=1e-12)


def test_transport_composition_along_geodesic(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        p = model.random_point(rng)
        x = model.project(p)
        v = safe_base_step(model, rng, x, scale=0.8)
        mid = model.base_geodesic(x, v, 0.5)
        end = model.base_geodesic(x, v, 1.0)
        two_leg = model.horizontal_transport(model.horizontal_transport(p, mid), end)
        direct = model.horizontal_transport(p, end)
        assert model.total_distance(two_leg, direct) < 1e-8


def test_transport_guard(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    with pytest.raises(BeyondInjectivityRadius):
        model.horizontal_transport(p, -model.project(p))


# --- adapted exponential ---------------------------------------------------------------------


def test_adapted_exp_flat_closed_form(rng):
    model = get_model("flat3")
    p = np.array([0.1, 0.7, 0.4])
    w = np.array([0.2, -0.1, 0.3])
    out = model.adapted_exp(p, w)
    assert np.allclose(out, (p + w) % 1.0, atol=1e-12)


def test_adapted_exp_vertical_is_fiber_rotation(rng):
    model = get_model("hopf")
    p = model.random_point(rng)
    theta = 0.81
    out = model.adapted_exp(p, theta * model.vertical_unit(p))
    assert np.allclose(out, model.fiber_shift(p, theta), atol=1e-12)


def test_adapted_exp_base_point(rng):
    for name in ALL_MODELS:
        model = get_model(name)
        p = model.random_point(rng)
        w = random_tangent(model, rng, p)
        cap = 0.2 if name.startswith("flat") else 0.5
        w *= cap / max(1.0, model.total_norm(p, w))
        out = model.adapted_exp(p, w)
        target = model.base_geodesic(model.project(p), model.dproj(p, w), 1.0)
        assert model.base_distance(model.project(out), target) < 1e-8


@pytest.mark.parametrize("name", ["flat2", "hopf", "lens2"])
def test_adapted_exp_jacobian_nondegenerate(name, rng):
    model = get_model(name)
    p = model.random_point(rng)
    if name == "flat2":
        basis = np.eye(2)
    else:
        x = model.project(p)
        u1 = model.base_tangent_project(x, rng.normal(size=3))
        u1 /= np.linalg.norm(u1)
        u2 = np.cross(x, u1)
        basis = np.stack(
            [
                model.vertical_unit(p),
                model.horizontal_lift_vec(p, 2.0 * u1).vector,
                model.horizontal_lift_vec(p, 2.0 * u2).vector,
            ]
        )
    eps = 1e-5
    cols = []
    for e in basis:
        d = (model.adapted_exp(p, eps * e) - model.adapted_exp(p, -eps * e)) / (2 * eps)
        cols.append(basis @ d)
    jac = np.stack(cols, axis=1)
    assert abs(np.linalg.det(jac)) > 0.1


# --- lens quotients ---------------------------------------------------------------------------


def test_lens_canonicalize_is_deck_invariant(rng):
    model = get_model("lens3")
    zeta = model.deck_generator()
    for _ in range(50):
        p = model.random_point(rng)
        canon = model.canonicalize(p)
        assert np.allclose(model.canonicalize(qmul(p, zeta)), canon, atol=1e-12)
        assert np.allclose(model.canonicalize(canon), canon, atol=1e-15)


def test_lens_distance_minimizes_over_deck(rng):
    model = get_model("lens2")
    hopf = get_model("hopf")
    p = model.random_point(rng)
    q = model.random_point(rng)
    orbit = model.deck_orbit(q)
    want = min(float(hopf.total_distance(p, o)) for o in orbit)
    assert np.isclose(model.total_distance(p, q), want, atol=1e-12)


def test_lens_transport_commutes_with_deck(rng):
    model = get_model("lens3")
    zeta = model.deck_generator()
    p = model.random_point(rng)
    x = model.project(p)
    v = model.random_base_tangent(rng, x)
    v *= 0.9 / np.linalg.norm(v)
    xt = model.base_geodesic(x, v, 1.0)
    a = model.horizontal_transport(qmul(p, zeta), xt)
    b = qmul(model.horizontal_transport(p, xt), zeta)
    assert np.allclose(a, b, atol=1e-12)


def test_lens_fiber_period():
    model = get_model("lens2")
    x = np.array([0.0, 1.0, 0.0])
    fiber = model.model_fiber(x, 8)
    section = get_model("hopf").section(x)
    expected = qmul(section, quat_exp_i(2 * np.pi / (2 * 8)))
    assert np.allclose(fiber[1], expected, atol=1e-12)
    # samples sweep the 1/e arc of the covering great circle and stop short
    # of closing it
    ang = np.arccos(np.clip(fiber @ fiber[0], -1, 1))
    assert np.isclose(ang.max(), model.fiber_period * 7 / 8, atol=1e-9)


# --- model fibers, grids, automorphisms -------------------------------------------------------


@pytest.mark.parametrize("name", ALL_MODELS)
def test_model_fiber_projects_to_point(name, rng):
    model = get_model(name)
    x = model.random_base(rng)
    fiber = model.model_fiber(x, 16)
    assert fiber.shape == (16, model.ambient_dim)
    xs = model.project(fiber)
    assert np.max(model.base_distance(xs, np.broadcast_to(x, xs.shape))) < 1e-9


def test_model_fiber_equal_spacing(rng):
    model = get_model("hopf")
    fiber = model.model_fiber(model.random_base(rng), 32)
    gaps = model.total_distance(fiber, np.roll(fiber, -1, axis=0))
    assert np.allclose(gaps, 2 * np.pi / 32, atol=1e-9)


def test_base_grid_shapes():
    assert get_model("flat2").base_grid(8).shape == (8, 1)
    assert get_model("flat3").base_grid(16).shape == (16, 2)
    grid = get_model("hopf").base_grid(40)
    assert grid.shape == (40, 3)
    assert np.allclose(np.linalg.norm(grid, axis=1), 1.0, atol=1e-12)
    with pytest.raises(BaseMismatch):
        get_model("flat3").base_grid(7)


@pytest.mark.parametrize("name", ALL_MODELS)
def test_automorphism_intertwines_projection(name, rng):
    model = get_model(name)
    aut = model.sample_automorphism(rng)
    p = model.random_point(rng)
    q = model.random_point(rng)
    lhs = model.project(aut.apply(p))
    rhs = aut.base_apply(model.project(p))
    assert np.max(model.base_distance(lhs, rhs)) < 1e-9
    assert np.isclose(
        model.total_distance(aut.apply(p), aut.apply(q)),
        model.total_distance(p, q),
        atol=1e-9,
    )


# --- registry ----------------------------------------------------------------------------------


def test_get_model_errors():
    with pytest.raises(UnsupportedBase):
        get_model("klein")
    with pytest.raises(UnsupportedBase):
        get_model("lensx")
    with pytest.raises(UnsupportedBase):
        get_model("lens1")
    assert get_model("lens5").euler == 5
