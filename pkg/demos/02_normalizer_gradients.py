"""Poke at the identity-aware normalizer and check its gradients by hand.

Runs the layer forward on a two-sample batch, backpropagates a unit
gradient, and compares every analytic derivative against central finite
differences. Finishes with the two degeneracies worth knowing: blend 1.0
passes features through untouched, and a single shared group reproduces the
group-free learnable layer bit for bit.
"""

import math

import numpy as np

from fin_equity import FinParams, fin_backward, fin_forward, lbn_forward, softplus


def finite_diff(f, arr, h=1e-6):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        keep = arr[ix]
        arr[ix] = keep + h
        hi = f()
        arr[ix] = keep - h
        lo = f()
        arr[ix] = keep
        g[ix] = (hi - lo) / (2 * h)
    return g


def main():
    mu = np.array([[1.0, 0.0], [-0.5, 0.25]])
    tau = np.array([[math.log(math.e**2 - 1), math.log(math.e - 1)], [0.3, -0.2]])
    params = FinParams(mu=mu, tau=tau, momentum=0.3)
    z = np.array([[3.0, -1.0], [0.5, 2.0]])
    attrs = np.array([0, 1])

    out, cache = fin_forward(z, attrs, params)
    print("input:\n", z)
    print("sigma per group:\n", softplus(tau))
    print("output (blend 0.3):\n", out)

    grad_out = np.ones_like(out)
    grad_z, grad_mu, grad_tau = fin_backward(grad_out, cache)

    def total():
        o, c = fin_forward(z, attrs, params)
        del c
        return float(o.sum())

    for name, analytic, arr in (
        ("d/d input", grad_z, z),
        ("d/d mu", grad_mu, mu),
        ("d/d tau", grad_tau, tau),
    ):
        numeric = finite_diff(total, arr)
        worst = float(np.abs(analytic - numeric).max())
        print(f"{name}: max |analytic - numeric| = {worst:.2e}")

    # blend 1.0 is a bitwise no-op
    passthrough = FinParams(mu=mu.copy(), tau=tau.copy(), momentum=1.0)
    out1, _ = fin_forward(z, attrs, passthrough)
    print("blend 1.0 returns the input bitwise:", bool((out1 == z).all()))

    # one group == shared learnable layer
    one = FinParams(mu=mu[:1].copy(), tau=tau[:1].copy(), momentum=0.3)
    via_groups, _ = fin_forward(z, np.zeros(2, dtype=int), one)
    via_shared, _ = lbn_forward(z, one)
    print("single group matches the shared layer bitwise:", bool((via_groups == via_shared).all()))


if __name__ == "__main__":
    main()
