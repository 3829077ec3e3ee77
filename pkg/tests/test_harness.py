import json

import pytest

from rootamort.errors import DomainError
from rootamort.harness import (
    ExperimentConfig,
    chebyshev,
    gen_family,
    main,
    mignotte,
    mignotte_a_for,
    random_poly,
    read_poly,
    run_case,
    run_cases,
    run_experiment,
    scaling_study,
    wilkinson,
)
from rootamort.polynomial import IntPolynomial, square_free_check
from rootamort.subdivide import isolate

P = IntPolynomial


def test_wilkinson_3():
    assert wilkinson(3) == P([-6, 11, -6, 1])


def test_mignotte_4_3():
    assert mignotte(4, 3) == P([-2, 12, -18, 0, 1])
    with pytest.raises(DomainError):
        mignotte(2, 3)


def test_mignotte_a_fits_L():
    for L in range(3, 17):
        a = mignotte_a_for(L)
        assert max(2 * a * a, 4 * a) < 2**L
        assert max(2 * (a + 1) ** 2, 4 * (a + 1)) >= 2**L
        assert mignotte(6, a).bit_height <= L


def test_chebyshev_small():
    assert chebyshev(1) == P([0, 1])
    assert chebyshev(2) == P([-2, 0, 1])
    assert chebyshev(3) == P([0, -3, 0, 1])
    for n in range(1, 11):
        p = chebyshev(n)
        assert p.lead == 1 and square_free_check(p)


def test_random_deterministic():
    a = random_poly(5, 8, 42)
    assert a == random_poly(5, 8, 42)
    assert a.degree == 5 and a.bit_height <= 8 and square_free_check(a)


def test_gen_family_dispatch():
    assert gen_family("wilkinson", n=3) == wilkinson(3)
    assert gen_family("mignotte", d=4, a=3) == mignotte(4, 3)
    with pytest.raises(DomainError):
        gen_family("legendre", n=3)


def test_read_poly_inline_and_file(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# x^2 - 2\n-2 0 1\n")
    assert read_poly(str(f)) == P([-2, 0, 1]) == read_poly("-2 0 1")


def test_run_experiment_wilkinson3():
    recs = run_experiment(ExperimentConfig(family="wilkinson", d=3, algorithms=["sturm"]))
    (r,) = recs
    assert r["holds"] and r["isolation_ok"]
    assert r["measured_leaves"] <= max(1.0, r["ca_bound"]["hi"])
    assert set(r["md"]) == {"real_chain", "nearest_neighbor", "conjugate_pairs"}


def test_linear_poly_one_leaf():
    recs = run_experiment(ExperimentConfig(family="file", path="-5 1", algorithms=["sturm", "descartes", "eval"]))
    assert [r["measured_leaves"] for r in recs] == [1, 1, 1]
    assert all(r["holds"] for r in recs)


def test_non_square_free_is_recorded(tmp_path):
    out = tmp_path / "r.jsonl"
    recs = run_experiment(ExperimentConfig(family="file", path="1 -2 1", algorithms=["sturm"], out=str(out)))
    assert "not square-free" in recs[0]["error"] and recs[0]["holds"] is False
    assert json.loads(out.read_text().splitlines()[0])["error"] == recs[0]["error"]


def test_batch_isolation():
    cases = [((1, -2, 1), "sturm", "bad"), ((-2, 0, 1), "sturm", "good")]
    bad, good = run_cases(cases, with_bit=False)
    assert "error" in bad and good["holds"]
    assert good == {**run_case((-2, 0, 1), "sturm", key="good", with_bit=False), "wall_time": good["wall_time"]}


def test_replay_is_deterministic():
    a = run_case(tuple(random_poly(6, 8, 1).coeffs), "descartes")
    b = run_case(tuple(random_poly(6, 8, 1).coeffs), "descartes")
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_wilkinson_leaves_nondecreasing():
    counts = [isolate(wilkinson(n), "sturm").leaf_count for n in range(3, 9)]
    assert counts == sorted(counts)


def test_scaling_single_row():
    out = scaling_study("mignotte", [6], 8, "descartes")
    assert len(out["rows"]) == 1 and out["max_over_min"] == 1.0


def test_scaling_bounded_ratio():
    out = scaling_study("mignotte", [4, 6, 8, 10], 8, "descartes")
    assert out["max_over_min"] <= 10


def test_cli_isolate(capsys):
    assert main(["isolate", "--poly", "-2 0 1", "--alg", "descartes"]) == 0
    out = capsys.readouterr().out
    assert out.count("root in") == 2 and "leaves=" in out


def test_cli_verify_writes_report(tmp_path, capsys):
    out = tmp_path / "rep.jsonl"
    rc = main(["verify", "--family", "wilkinson", "--d", "4", "--alg", "sturm,csturm", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and all(json.loads(x)["holds"] for x in lines)
    assert not list(tmp_path.glob("*.tmp"))


def test_cli_scaling(capsys, tmp_path):
    assert main(["scaling", "--family", "mignotte", "--d-range", "4:8:2", "--L", "8"]) == 0
    assert "max/min ratio" in capsys.readouterr().out


def test_cli_domain_error_exit_code(capsys):
    assert main(["isolate", "--poly", "1 -2 1"]) == 2
    assert "error" in capsys.readouterr().err
