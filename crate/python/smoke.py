"""Smoke test for the modlab_py extension.

Build and install first:

    pip install --no-build-isolation ./crates/modlab-py
    python python/smoke.py
"""

import math

import modlab_py as m


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    # Heat kernel at the origin: (4πt)^{-1/2}.
    close(m.kernel("heat", 0.5, [0.0]), 1 / math.sqrt(2 * math.pi), 1e-14)
    close(m.kernel("poisson", 1.0, [1.0]), 1 / (2 * math.pi), 1e-14)
    try:
        m.kernel("heat", -1.0, [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("negative t accepted")

    x, re, im = m.sample_data("gauss:0.25", half_width=8.0, n=256)
    assert len(x) == len(re) == len(im) == 256
    close(sum(re) * (x[1] - x[0]), 1.0, 1e-10)
    assert max(abs(v) for v in im) == 0.0

    # ‖h_t‖ in M^{2,2} with the unit Gaussian window is ‖h_t‖₂‖φ‖₂ = (8πt)^{-1/4} 2^{-1/4}.
    t = 0.25
    close(m.modulation_norm("gauss:0.25", n=512), (8 * math.pi * t) ** -0.25 * 2 ** -0.25, 1e-6)

    mf = m.maximal_function("indicator:1", n=512)
    assert max(mf) == 1.0 and min(mf) > 0.0

    verdict, norms = m.weight_class("Dh", "exp:-1,2", [0.2])
    assert verdict == "member", (verdict, norms)

    errors, verdict = m.convergence("heat", "gauss:0.25", [2.0 ** -k for k in range(2, 9)], n=2048)
    assert verdict == "converges" and all(b < a for a, b in zip(errors, errors[1:])), errors

    rows = m.verify(["mehler"])
    assert rows and all(r[4] for r in rows), rows
    print(f"ok: {len(rows)} mehler checks, final heat error {errors[-1]:.2e}")


if __name__ == "__main__":
    main()
