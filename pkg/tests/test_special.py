import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from euler_geom.errors import PoleError
from euler_geom.special import EULER_GAMMA, cin, cosine_integral


def test_cosine_integral_examples():
    # independent oracles: scipy's sici and a direct oscillatory quadrature
    tail = integrate.quad(lambda t: 1.0 / t, 1.0, np.inf, weight="cos", wvar=1.0)[0]
    assert cosine_integral(1.0) == pytest.approx(-tail, abs=1e-10)
    assert cosine_integral(1.0) == pytest.approx(special.sici(1.0)[1], abs=1e-15)
    assert cosine_integral(1.0) == pytest.approx(0.337404, abs=1e-6)
    assert cosine_integral(-1.0) == cosine_integral(1.0)
    with pytest.raises(PoleError):
        cosine_integral(0.0)


def test_cosine_integral_log_limit():
    s = np.geomspace(1e-12, 1.0, 50)
    assert np.all(np.abs(cosine_integral(s) - np.log(s)) < 1.0)
    assert cosine_integral(1e-10) - math.log(1e-10) == pytest.approx(EULER_GAMMA, abs=1e-12)
    assert cin(0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-3, 200.0))
def test_cosine_integral_against_scipy(x):
    assert cosine_integral(x) == pytest.approx(special.sici(x)[1], abs=1e-14, rel=1e-13)
    assert cosine_integral(-x) == cosine_integral(x)
