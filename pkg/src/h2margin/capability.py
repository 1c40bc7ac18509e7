"""Generator reactive-capability envelope.

Round-rotor machine model with three closed-form limits, all in pu on the
system base:

* armature (stator-current) ceiling: the machine must stay inside the
  apparent-power circle ``pg^2 + q^2 <= (v*ig_max)^2``;
* field (rotor-current) ceiling: inside the excitation circle of radius
  ``v*emf/xs`` centred at ``(0, -v^2/xs)``;
* under-excitation floor from the rotor-angle limit ``delta_max``.

The effective ceiling is the pointwise minimum of the armature and field
ceilings.  Inside the optimisation model these appear as smooth squared
constraints; the closed forms here are the reference for the oracle, for
reporting and for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import GeneratorRecord


class CapabilityDomainError(ValueError):
    """Active power outside the capability circle (no real reactive limit)."""


def _radicand(name: str, value):
    value = np.asarray(value, dtype=float)
    if np.any(value < 0.0):
        raise CapabilityDomainError(f"{name}: active power exceeds the circle radius")
    return value


def armature_q_limit(pg, v, ig_max):
    """Reactive ceiling imposed by the stator-current limit."""
    rad = _radicand("armature limit", (np.asarray(v) * ig_max) ** 2 - np.asarray(pg) ** 2)
    return np.sqrt(rad)


def field_q_limit(pg, v, emf, xs):
    """Reactive ceiling imposed by the rotor-current (excitation) limit."""
    v = np.asarray(v, dtype=float)
    rad = _radicand("field limit", (v * emf / xs) ** 2 - np.asarray(pg) ** 2)
    return np.sqrt(rad) - v * v / xs


def underexcitation_q_min(pg, v, delta_max, xs):
    """Reactive floor imposed by the rotor-angle limit."""
    v = np.asarray(v, dtype=float)
    cot = math.cos(delta_max) / math.sin(delta_max)
    return np.asarray(pg) * cot - v * v / xs


@dataclass(frozen=True)
class CapabilityEnvelope:
    q_max: float
    q_min: float
    binding: str  # "armature" | "field"


def q_envelope(pg, v, gen: GeneratorRecord):
    """Effective reactive bounds of ``gen`` at operating point ``(pg, v)``.

    Scalar inputs give a :class:`CapabilityEnvelope`; array inputs give a
    ``(q_max, q_min)`` pair of arrays.
    """
    l1 = armature_q_limit(pg, v, gen.ig_max)
    l2 = field_q_limit(pg, v, gen.emf, gen.xs)
    qmin = underexcitation_q_min(pg, v, gen.delta_max, gen.xs)
    if np.ndim(pg) == 0 and np.ndim(v) == 0:
        if float(l1) <= float(l2):
            return CapabilityEnvelope(q_max=float(l1), q_min=float(qmin), binding="armature")
        return CapabilityEnvelope(q_max=float(l2), q_min=float(qmin), binding="field")
    return np.minimum(l1, l2), qmin


def q_envelope_derivatives(pg, v, gen: GeneratorRecord):
    """d(q_max)/d(pg), d(q_max)/d(v) of the binding ceiling (array friendly).

    Used by the power-flow oracle when a limited generator tracks its
    envelope as the voltage moves.
    """
    pg = np.asarray(pg, dtype=float)
    v = np.asarray(v, dtype=float)
    r1 = _radicand("armature limit", (v * gen.ig_max) ** 2 - pg**2)
    r2 = _radicand("field limit", (v * gen.emf / gen.xs) ** 2 - pg**2)
    s1 = np.sqrt(r1)
    s2 = np.sqrt(r2)
    armature_binds = s1 <= s2 - v * v / gen.xs
    s1 = np.maximum(s1, 1e-12)
    s2 = np.maximum(s2, 1e-12)
    dq_dpg = np.where(armature_binds, -pg / s1, -pg / s2)
    dq_dv = np.where(
        armature_binds,
        v * gen.ig_max**2 / s1,
        v * (gen.emf / gen.xs) ** 2 / s2 - 2.0 * v / gen.xs,
    )
    return dq_dpg, dq_dv


__all__ = [
    "CapabilityDomainError",
    "CapabilityEnvelope",
    "armature_q_limit",
    "field_q_limit",
    "underexcitation_q_min",
    "q_envelope",
    "q_envelope_derivatives",
]
