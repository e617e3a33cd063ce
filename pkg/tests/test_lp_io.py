import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import highs_mps, random_box_lp
from p2hgrid import formulation
from p2hgrid.formulation import FormulationOptions, build
from p2hgrid.lp import LinearProgram, LPBuilder, VariableIndex
from p2hgrid.solver import check_solution, read_mps, solve, write_mps
from p2hgrid.solver.mps import read_name_map


def small_builder_lp():
    b = LPBuilder("demo")
    x = b.add_vars("x", [["a", "b"], [1, 2, 3]], lb=0.0, ub=[[1, 2, 3], [4, 5, 6]], cost=1.0)
    y = b.add_vars("y", [], lb=-np.inf, ub=np.inf, cost=-2.0)
    r = b.add_rows("sum", [[1, 2, 3]], "G", rhs=[1.0, 2.0, 3.0])
    b.add_terms(r, x[0], 1.0)
    b.add_terms(r, x[1], 2.0)
    cap = b.add_rows("cap", [], "L", rhs=4.0)
    b.add_terms(cap, y, 1.0)
    b.add_terms(cap, x[0, 0], 0.0)  # explicit zeros are dropped
    b.obj_offset = 7.5
    return b.build(), x, y


def test_builder_layout_and_names():
    lp, x, y = small_builder_lp()
    assert lp.shape == (4, 7)
    assert x.shape == (2, 3) and int(y) == 6
    assert lp.col_names()[:3] == ["x(a,1)", "x(a,2)", "x(a,3)"]
    assert lp.col_names()[6] == "y"
    assert lp.row_names() == ["sum(1)", "sum(2)", "sum(3)", "cap"]
    assert lp.columns.locate(4) == ("x", ("b", "2"))
    assert lp.A.nnz == 7
    np.testing.assert_array_equal(lp.ub[:6], [1, 2, 3, 4, 5, 6])
    assert list(lp.senses) == ["G", "G", "G", "L"]


def test_builder_rejects_duplicates_and_bad_sense():
    b = LPBuilder()
    b.add_vars("x", [[1]])
    with pytest.raises(ValueError, match="duplicate"):
        b.add_vars("x", [[2]])
    with pytest.raises(ValueError, match="sense"):
        b.add_rows("r", [[1]], "<")


def test_variable_index_is_a_bijection():
    idx = VariableIndex()
    idx.add("p", [range(3), ["t1", "t2"]])
    idx.add("q", [])
    names = idx.names()
    assert len(names) == len(set(names)) == idx.size == 7
    for j in range(idx.size):
        fam, labels = idx.locate(j)
        assert (f"{fam}({','.join(labels)})" if labels else fam) == names[j]
    with pytest.raises(IndexError):
        idx.locate(7)


def test_duplicate_terms_are_summed():
    b = LPBuilder()
    x = b.add_vars("x", [[0]])
    r = b.add_rows("r", [[0]], "E", rhs=3.0)
    b.add_terms(r, x, 1.0)
    b.add_terms(r, x, 2.0)
    lp = b.build()
    assert lp.A.toarray().tolist() == [[3.0]]


def test_mps_round_trip_is_exact(tmp_path):
    lp, _, _ = small_builder_lp()
    path = write_mps(lp, tmp_path / "demo.mps")
    back = read_mps(path)
    for a, b in zip(lp.triplets(), back.triplets()):
        np.testing.assert_array_equal(a, b)
    for field in ("senses", "rhs", "lb", "ub", "c"):
        np.testing.assert_array_equal(getattr(lp, field), getattr(back, field))
    assert back.obj_offset == lp.obj_offset
    rows, cols = read_name_map(path)
    assert cols["C0000007"] == "y" and rows["R0000004"] == "cap"


def test_mps_bound_codes(tmp_path):
    lp = LinearProgram.from_dense([[1, 1, 1, 1, 1]], "L", [10],
                                  lb=[-np.inf, -np.inf, 2, 3, 0], ub=[np.inf, 4, 2, np.inf, -0.0 + 1], c=[1] * 5)
    text = write_mps(lp, tmp_path / "b.mps").read_text()
    assert " FR BND       C0000001" in text
    assert " MI BND       C0000002" in text and " UP BND       C0000002  4" in text
    assert " FX BND       C0000003  2" in text
    assert " LO BND       C0000004  3" in text
    assert all(len(line) <= 61 for line in text.splitlines())


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.sampled_from([1.0, 1e-7, 3.3e5, 1 / 3]))
def test_mps_round_trip_random(tmp_path_factory, seed, scale):
    rng = np.random.default_rng(seed)
    A, s, b, lb, ub, c = random_box_lp(rng)
    lp = LinearProgram.from_dense(A * scale, s, b * scale, lb, ub, c / 7, obj_offset=rng.normal())
    path = tmp_path_factory.mktemp("mps") / "r.mps"
    back = read_mps(write_mps(lp, path, name_map=False))
    assert back.shape == lp.shape
    for a, bb in zip(lp.triplets(), back.triplets()):
        np.testing.assert_array_equal(a, bb)
    for field in ("senses", "rhs", "lb", "ub", "c"):
        np.testing.assert_array_equal(getattr(lp, field), getattr(back, field))
    assert back.obj_offset == lp.obj_offset


def test_reader_errors(tmp_path):
    bad = tmp_path / "bad.mps"
    bad.write_text("NAME x\nROWS\n N COST\n L R1\nCOLUMNS\n X R9 1\nENDATA\n")
    with pytest.raises(ValueError):
        read_mps(bad)
    with pytest.raises(OSError):
        write_mps(LinearProgram.from_dense([[1]], "L", [1]), tmp_path / "no" / "dir" / "x.mps")


def test_highs_reads_exported_model(tmp_path, toy6):
    lp = formulation.build(toy6, FormulationOptions(segments=2))
    path = write_mps(lp, tmp_path / "toy6.mps")
    ours = solve(lp)
    ref = highs_mps(path)
    assert ref.status == "optimal"
    assert abs(ours.objective - ref.objective) <= 1e-6 * abs(ref.objective)


def test_check_solution_reports_violations():
    lp, x, y = small_builder_lp()
    point = np.zeros(lp.n_cols)
    rep = check_solution(lp, point)
    assert rep.violated_rows() == ["sum(1)", "sum(2)", "sum(3)"]
    assert rep.max_row_violation == 3.0
    point[0] = 1.5  # above its upper bound of 1
    point[6] = -1.0
    rep = check_solution(lp, point)
    assert rep.violated_bounds() == ["x(a,1)"]
    assert rep.objective == pytest.approx(1.5 + 2.0 + 7.5)
    assert "violated rows" in rep.summary()
    with pytest.raises(ValueError):
        check_solution(lp, np.zeros(3))


def test_check_solution_accepts_solver_output():
    lp, _, _ = small_builder_lp()
    lp2 = LinearProgram(A=lp.A, senses=lp.senses, rhs=lp.rhs, lb=lp.lb, ub=lp.ub,
                        c=np.r_[lp.c[:6], 0.0], obj_offset=lp.obj_offset, columns=lp.columns, rows=lp.rows)
    r = solve(lp2)
    assert r.optimal
    assert check_solution(lp2, r.x).ok(1e-9)
    assert sp.issparse(lp2.A)


@pytest.mark.slow
def test_full_horizon_export_size_and_time(tmp_path):
    import time

    import highspy

    from p2hgrid.datamodel import load_scenario

    t0 = time.perf_counter()
    s = load_scenario("ireland35")
    lp = build(s)
    path = write_mps(lp, tmp_path / "ie240.mps")
    assert time.perf_counter() - t0 < 60
    assert path.stat().st_size < 200 * 2**20
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    assert (h.getNumRow(), h.getNumCol()) == lp.shape
