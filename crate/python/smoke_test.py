"""Smoke test for the heatcalc Python module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/python
then run:
    python python/smoke_test.py
"""

import math

import numpy as np

import heatcalc


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


def main():
    h = heatcalc.Operator.torus(8, 1)
    assert h.dim == 8 and h.label.startswith("torus")
    eig = np.sort(np.linalg.eigvalsh(np.array(h.matrix())))
    assert np.allclose(np.sort(h.eigenvalues()), eig, atol=1e-12)

    # heat semigroup against numpy's eigendecomposition
    w, v = np.linalg.eigh(np.array(h.matrix()))
    expected = v @ np.diag(np.exp(-0.3 * w)) @ v.T
    assert np.allclose(np.array(h.heat_semigroup(0.3)), expected, atol=1e-12)

    phi = heatcalc.Multiplier("cauchy")
    close(phi(1.0), 0.5, 1e-15)
    close(heatcalc.mu_n(phi, 4096, 1.0), 0.5, 1e-3)
    close(heatcalc.mu_n(heatcalc.Multiplier("poly1"), 10, 2.0), 2.0, 1e-9)

    approx = np.array(heatcalc.approximate_calculus(h, phi, 256))
    oracle = np.array(heatcalc.oracle_calculus(h, phi))
    rep = heatcalc.calculus_report(h, phi, 256)
    close(np.linalg.norm(approx - oracle, 2), rep["approx_error_2"], 1e-8)
    assert rep["approx_error_2"] <= rep["scalar_sup_error"] + 1e-8

    # scalar contour identity: (N s mu)^(N+1) e^(-N s mu) for N = 2, s = 1, mu = 1
    one = heatcalc.Operator.diagonal([1.0])
    close(heatcalc.contour_power(one, 1.0, 2)[0][0], 8 * math.exp(-2), 1e-10)

    # (s mu)^gamma e^(-zeta s mu) for a scalar
    z = 2 + 0.5j
    got = heatcalc.subordinated_fractional(one, 0.5, z, 0.5)[0][0]
    want = 0.5 ** 0.5 * np.exp(-0.5 * z)
    assert abs(got - want) < 1e-8 * abs(want), (got, want)

    # ||A||_{1 -> inf} is the max entry modulus
    a = [[1.0, -3.0], [2.0, 0.5]]
    close(heatcalc.opnorm(a, 1.0, math.inf), 3.0, 1e-15)

    close(heatcalc.sigma_of(1.0, 3.0), 1.5, 1e-15)
    rep = heatcalc.derivative_bound(heatcalc.Operator.torus(16, 1), 1.0, 1.0, n_grid=[1, 2, 4], t_grid=[0.1, 1.0])
    assert rep["assertion"] == "DERIV" and len(rep["rows"]) == 6
    assert math.isfinite(rep["sup_ratio"])

    _, trace = heatcalc.spectral_density(h, 1.0, 50)
    assert trace > 0

    try:
        heatcalc.Operator([[1.0, 2.0], [0.0, 1.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("non-symmetric matrix accepted")

    print("heatcalc smoke test: ok")


if __name__ == "__main__":
    main()
