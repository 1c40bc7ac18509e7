"""Machine reactive-capability limits against closed forms."""

import math

import numpy as np
import pytest

from h2margin.capability import (
    CapabilityDomainError,
    armature_q_limit,
    field_q_limit,
    q_envelope,
    q_envelope_derivatives,
    underexcitation_q_min,
)
from h2margin.records import GeneratorRecord


def _gen(emf=2.574, xs=1.912, ig_max=1.0, delta_max=math.pi / 2):
    return GeneratorRecord(
        bus=1, p_min=0.0, p_max=1.0, ramp_up=1.0, ramp_down=1.0,
        pg_set=0.5, vg_set=1.0, emf=emf, xs=xs, ig_max=ig_max,
        delta_max=delta_max, machine_base=100.0, is_slack=False,
    )


def test_armature_limit_pythagoras():
    # |S| = v*ig = 1.0, P = 0.6 -> Q = 0.8
    assert armature_q_limit(0.6, 1.0, 1.0) == pytest.approx(0.8, abs=1e-15)


def test_field_limit_zero_active_power():
    assert field_q_limit(0.0, 1.0, 2.574, 1.912) == pytest.approx(0.823221, abs=1e-6)


def test_field_limit_closed_form_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        v = rng.uniform(0.9, 1.1)
        emf = rng.uniform(1.5, 3.0)
        xs = rng.uniform(0.8, 2.5)
        pg = rng.uniform(0.0, 0.9 * v * emf / xs)
        expect = math.sqrt((v * emf / xs) ** 2 - pg**2) - v * v / xs
        assert field_q_limit(pg, v, emf, xs) == pytest.approx(expect, rel=1e-14)


def test_underexcitation_floor_at_right_angle():
    # cot(pi/2) = 0 so the floor is -v^2/xs regardless of loading
    assert underexcitation_q_min(0.7, 1.0, math.pi / 2, 1.912) == pytest.approx(
        -0.523013, abs=1e-6
    )
    assert underexcitation_q_min(0.0, 1.0, math.pi / 2, 1.912) == pytest.approx(
        -1.0 / 1.912, rel=1e-12
    )


def test_underexcitation_floor_slope():
    delta = math.pi / 3
    got = underexcitation_q_min(0.5, 1.0, delta, 2.0)
    assert got == pytest.approx(0.5 / math.tan(delta) - 0.5, rel=1e-12)


def test_envelope_is_min_of_closed_forms():
    rng = np.random.default_rng(11)
    gen = _gen()
    for _ in range(500):
        v = rng.uniform(0.9, 1.1)
        pg = rng.uniform(0.0, 0.85)
        env = q_envelope(pg, v, gen)
        l1 = armature_q_limit(pg, v, gen.ig_max)
        l2 = field_q_limit(pg, v, gen.emf, gen.xs)
        assert env.q_max == min(l1, l2)
        assert env.binding == ("armature" if l1 <= l2 else "field")
        assert env.q_min == pytest.approx(
            underexcitation_q_min(pg, v, gen.delta_max, gen.xs), rel=1e-14
        )


def test_envelope_array_form_matches_scalar():
    gen = _gen()
    pg = np.linspace(0.0, 0.8, 9)
    v = np.linspace(0.92, 1.08, 9)
    qmax, qmin = q_envelope(pg, v, gen)
    for i in range(9):
        env = q_envelope(float(pg[i]), float(v[i]), gen)
        assert qmax[i] == pytest.approx(env.q_max, rel=1e-14)
        assert qmin[i] == pytest.approx(env.q_min, rel=1e-14)


def test_domain_error_when_loading_exceeds_ratings():
    gen = _gen()
    with pytest.raises(CapabilityDomainError):
        armature_q_limit(1.5, 1.0, 1.0)
    with pytest.raises(CapabilityDomainError):
        q_envelope(5.0, 1.0, gen)


def test_envelope_derivatives_match_finite_differences():
    gen = _gen()
    rng = np.random.default_rng(3)
    h = 1e-7
    for _ in range(50):
        v = rng.uniform(0.92, 1.08)
        pg = rng.uniform(0.05, 0.8)
        dq_dpg, dq_dv = q_envelope_derivatives(pg, v, gen)
        qp = q_envelope(pg + h, v, gen).q_max - q_envelope(pg - h, v, gen).q_max
        qv = q_envelope(pg, v + h, gen).q_max - q_envelope(pg, v - h, gen).q_max
        assert dq_dpg == pytest.approx(qp / (2 * h), rel=1e-5, abs=1e-7)
        assert dq_dv == pytest.approx(qv / (2 * h), rel=1e-5, abs=1e-7)
