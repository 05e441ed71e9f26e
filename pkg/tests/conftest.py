import numpy as np
import pytest

from scanfit import CompositionPlan, Connection, PortRef, StateSpaceModel, Subsystem


def first_order_lag() -> StateSpaceModel:
    """dx = -x + u, y = x: unit-gain lag with pole at -1."""
    return StateSpaceModel(
        np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[0.0]])
    )


def ring_plan(feedback_gain: float = -1.0) -> CompositionPlan:
    """Three identical lags in a loop; closed poles solve (s+1)^3 = gain.

    With gain -k the characteristic polynomial is (s+1)^3 + k, which
    crosses the imaginary axis at k = 8 (omega = sqrt(3)).
    """
    subs = (
        Subsystem("s1", "white_box", first_order_lag()),
        Subsystem("s2", "white_box", first_order_lag()),
        Subsystem("s3", "black_box", first_order_lag()),
    )
    conns = (
        Connection(PortRef("s1", "y0"), PortRef("s2", "u0"), 1.0),
        Connection(PortRef("s2", "y0"), PortRef("s3", "u0"), 1.0),
        Connection(PortRef("s3", "y0"), PortRef("s1", "u0"), feedback_gain),
    )
    return CompositionPlan(
        subs, conns, (PortRef("s1", "u0"),), (PortRef("s3", "y0"),)
    )


@pytest.fixture
def lag_model() -> StateSpaceModel:
    return first_order_lag()
