"""Smoke test for the disclose extension: python smoke_test.py"""

import json
import pathlib

import disclose

ROOT = pathlib.Path(__file__).resolve().parents[3]


def main():
    hospital = disclose.Problem((ROOT / "problems" / "hospital.dis").read_text())
    assert len(hospital.constraints) == 2
    assert hospital.classes()["auto"] == ["critrewrite"]

    r = hospital.check()
    assert r.verdict == "DISCLOSED", r
    assert r.witness and "p" in r.witness
    report = json.loads(r.to_json())
    assert report["algorithm"] == "critrewrite"

    try:
        import jsonschema
    except ImportError:
        jsonschema = None
    if jsonschema is not None:
        schema = json.loads((ROOT / "schemas" / "report.schema.json").read_text())
        jsonschema.validate(report, schema)

    assert hospital.check(algo="vischase", rounds=1).verdict == "UNKNOWN"

    k4 = disclose.gen_3coloring("1-2,1-3,1-4,2-3,2-4,3-4")
    assert k4.check().verdict == "NOT_DISCLOSED"
    problem, instance = disclose.gen_circuit_sat("o=OR(NOT 2,2)")
    assert len(instance) == 6
    assert problem.check(algo="vischase").verdict == "DISCLOSED"
    assert disclose.gen_id_chain(2).check().verdict == "DISCLOSED"

    again = disclose.Problem(str(disclose.random_problem("uid", 3)))
    assert str(again) == str(disclose.random_problem("uid", 3))

    summary = disclose.run_diff("uid", 0, 20)
    assert summary["total"] == 20 and summary["disagreements"] == 0, summary

    try:
        disclose.Problem("source R/1\npolicy: R(x\n")
    except disclose.DiscloseError as e:
        assert "2:" in str(e)
    else:
        raise AssertionError("parse error expected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
