"""Comparison verdicts, erasure checking, and the refinement probe."""

from fractions import Fraction

import pytest

from tapelang.analysis import (ComparisonReport, WINDOW, compare_programs,
                               erasure_check, erasure_check_depths,
                               refinement_probe, tv_distance)
from tapelang.dist import SubDistr, dzero
from tapelang.parser import parse
from tapelang.semantics import EMPTY_STATE, State, Tape
from tapelang.syntax import Hole, Label, erase, render
from tapelang.typecheck import TypecheckError


def core(src: str):
    return erase(parse(src))


FLIP = "flip()"
FLIP_OR = "let x = flip() in let y = flip() in x || y"
OMEGA = "(rec f (u : unit) : bool = f u) ()"


def test_exactly_equal():
    rep = compare_programs(core(FLIP), core("if flip() then true else false"),
                           n=10)
    assert rep.verdict == "exactly-equal"
    assert rep.stabilized
    assert rep.residual1 == rep.residual2 == 0
    assert not rep.matched_divergence


def test_distinguished_beats_everything():
    rep = compare_programs(core(FLIP_OR), core(FLIP), n=20)
    assert rep.verdict == "distinguished"
    assert tv_distance(rep.lower1, rep.lower2) == Fraction(1, 4)


def test_distinguished_is_sound_even_with_residual():
    # a stuck program's lower bound already exceeds what flip() can ever
    # put on that value, so the verdict is a refutation despite the
    # missing mass elsewhere
    rep = compare_programs(core("true"), core(FLIP), n=10)
    assert rep.verdict == "distinguished"


def test_drained_stuck_mass_certifies_refutation():
    # the stuck branch leaves the distribution entirely, so residual1 is 0
    # and mu1(false) = 0 is a limit fact, not a bound
    rep = compare_programs(core("if flip() then true else fst true"),
                           core(FLIP), n=10)
    assert rep.verdict == "distinguished"
    assert rep.residual1 == 0
    assert rep.lower1.mass() == Fraction(1, 2)


def test_left_refines():
    # left terminated (stuck half drained); right agrees on everything
    # produced so far but half its mass is still running
    rep = compare_programs(core("if flip() then true else fst true"),
                           core(f"if flip() then true else {OMEGA}"), n=30)
    assert rep.verdict == "left-refines"
    assert rep.residual1 == 0
    assert rep.residual2 == Fraction(1, 2)
    assert rep.lower1 == rep.lower2


def test_residual_blocks_left_refines():
    # half the mass is still running, so nothing is certifiable
    rep = compare_programs(core(f"if flip() then true else {OMEGA}"),
                           core(FLIP), n=30)
    assert rep.verdict == "inconclusive"
    assert rep.residual1 == Fraction(1, 2)


def test_matched_divergence():
    rep = compare_programs(core(OMEGA), core(OMEGA), n=10)
    assert rep.verdict == "inconclusive"
    assert rep.stabilized
    assert rep.matched_divergence
    assert rep.lower1 == rep.lower2 == dzero()
    assert rep.residual1 == rep.residual2 == 1


def test_unstabilized_divergence_is_not_matched():
    # flip() lands its values at depth 3, inside the window starting at 1,
    # so the window sees movement
    rep = compare_programs(core(FLIP), core(FLIP), n=1)
    assert rep.verdict == "inconclusive"
    assert not rep.stabilized
    assert not rep.matched_divergence


def test_report_serialization():
    rep = compare_programs(core(FLIP_OR), core(FLIP), n=20)
    data = rep.to_jsonable()
    assert data["verdict"] == "distinguished"
    assert data["lower1"] == {"false": "1/4", "true": "3/4"}
    assert data["residual1"] == "0"
    assert data["matched_divergence"] is False


# -- tv distance --------------------------------------------------------------

def test_tv_known_values():
    fair = SubDistr({"t": Fraction(1, 2), "f": Fraction(1, 2)})
    skew = SubDistr({"t": Fraction(3, 4), "f": Fraction(1, 4)})
    assert tv_distance(fair, skew) == Fraction(1, 4)
    assert tv_distance(fair, fair) == 0
    assert tv_distance(dzero(), fair) == 1


def test_tv_counts_mass_deficit():
    half = SubDistr({"t": Fraction(1, 2)})
    full = SubDistr({"t": Fraction(1, 2), "f": Fraction(1, 2)})
    assert tv_distance(half, full) == Fraction(1, 2)


def test_tv_symmetry_and_triangle():
    a = SubDistr({"x": Fraction(1, 3)})
    b = SubDistr({"x": Fraction(1, 6), "y": Fraction(1, 2)})
    c = SubDistr({"y": Fraction(1, 4)})
    assert tv_distance(a, b) == tv_distance(b, a)
    assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c)


# -- erasure ------------------------------------------------------------------

ONE_TAPE = State((), ((0, Tape(1, ())),))


def test_erasure_on_consumer():
    from tapelang.syntax import Int, Rand
    e = Rand(Int(1), Label(0))
    assert all(erasure_check_depths(e, ONE_TAPE, 0, range(11)).values())


def test_erasure_on_ignoring_program():
    assert erasure_check(core("1 + 2"), ONE_TAPE, 0, 5)


def test_erasure_on_unread_tape():
    two = State((), ((0, Tape(1, ())), (1, Tape(3, ()))))
    from tapelang.syntax import Int, Rand
    e = Rand(Int(1), Label(0))  # reads tape 0, never tape 1
    assert all(erasure_check_depths(e, two, 1, range(9)).values())


def test_erasure_unknown_label_raises():
    with pytest.raises(ValueError):
        erasure_check(core("1"), EMPTY_STATE, 0, 3)


def test_erasure_check_depths_matches_single_calls():
    from tapelang.syntax import Int, Rand
    e = Rand(Int(1), Label(0))
    table = erasure_check_depths(e, ONE_TAPE, 0, [0, 3, 7])
    for d, ok in table.items():
        assert ok == erasure_check(e, ONE_TAPE, 0, d)


# -- refinement probe ---------------------------------------------------------

def test_probe_runs_contexts():
    ctxs = [parse("hole"), parse("if hole then 1 else 0")]
    reports = refinement_probe(parse(FLIP_OR), parse(FLIP), ctxs, n=20)
    assert [r.verdict for r in reports] == ["distinguished", "distinguished"]


def test_probe_typechecks_plugged_contexts():
    with pytest.raises(TypecheckError):
        refinement_probe(parse(FLIP), parse(FLIP), [parse("hole + 1")], n=5)


def test_probe_requires_annotated_inputs():
    # the probe typechecks C[e]; bare core terms without annotations make
    # that meaningful only for annotation-free programs, which is fine
    reports = refinement_probe(parse(FLIP), parse(FLIP), [parse("hole")], n=9)
    assert reports[0].verdict == "exactly-equal"
