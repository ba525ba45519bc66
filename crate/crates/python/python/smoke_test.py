"""Smoke test for the smqs extension module.

Build first, e.g. `maturin develop --release` from crates/python, then run
`python python/smoke_test.py`.
"""

import cmath
import json

import smqs


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def main():
    d = 10

    reg = smqs.QuditRegister.basis_state(4, [1])
    reg.apply_qft(0)
    want = [cmath.exp(2j * cmath.pi * l / 4) / 2 for l in range(4)]
    assert all(close(a, b) for a, b in zip(reg.amplitudes, want))
    reg.apply_iqft(0)
    assert reg.approx_equal(smqs.QuditRegister.basis_state(4, [1]))

    # Worked example: secrets 4, 5, 6 with fabrication value 2.
    announced = []
    for k in (5, 6):
        p = smqs.fake_particle(d, 2)
        p.apply_qft(0)
        p.apply_shift(0, k)
        value, _ = p.measure(0, "V1", seed=k)
        announced.append(value)
    assert announced == [7, 8], announced
    assert [smqs.recover_secret_digit(a, 2, d) for a in announced] == [5, 6]

    assert smqs.compute_sum([[4], [5], [6]], d) == [5]
    assert smqs.v1_pass([3, 3, 4], d) and not smqs.v1_pass([1, 2, 3], d)
    assert smqs.v2_pass([2, 2, 2]) and not smqs.v2_pass([2, 3, 2])
    assert close(smqs.eve_decoy_error_probability(2), 0.25)

    omega = smqs.QuditRegister.omega_state(3, 2)
    assert close(sum(omega.outcome_distribution(0, "V2")), 1.0)

    tags = [tag for tag, _ in smqs.list_scenarios()]
    assert "iqft-attack" in tags, tags

    report = json.loads(
        smqs.run_scenario("iqft-attack", d=10, n=3, m=1, trials=5, seed=1,
                          secrets=[[4], [5], [6]], fake_r=2)
    )
    assert report["schema_version"] == smqs.SCHEMA_VERSION
    for trial in report["per_trial"]:
        assert trial["announced"] == [[7], [8]]
        assert trial["recovered"] == [[5], [6]]

    try:
        smqs.run_scenario("honest", d=1)
    except ValueError:
        pass
    else:
        raise AssertionError("d=1 accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
