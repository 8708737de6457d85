import numpy as np
import pytest

from ordeval.properties import (
    MAX_CLASSES,
    MIN_CLASSES,
    EXPECTED_PATTERNS,
    AuditTable,
    Case,
    PropertyId,
    TransformSpec,
    audit_all,
    check_imbalance,
    check_invariance,
    check_monotonicity,
    check_property,
    diagnose_empty_classes,
    evaluate_case,
    probes,
    random_case,
    replay,
    violates,
)

INV, MON, IMB = PropertyId.ORDINAL_INVARIANCE, PropertyId.ORDINAL_MONOTONICITY, PropertyId.IMBALANCE


def test_transform_must_increase():
    with pytest.raises(ValueError):
        TransformSpec((0, 2, 2), "flat")
    t = TransformSpec((0, 3, 7), "gaps")
    assert t.num_classes == 8
    assert t.apply(np.array([2, 0])).tolist() == [7, 0]


def test_violation_rules():
    assert violates(INV, (0.5, 0.5 + 1e-6))
    assert not violates(INV, (0.5, 0.5 + 1e-12))
    assert violates(MON, (0.5, 0.5))
    assert not violates(MON, (0.5, 0.6))
    assert violates(IMB, (0.5, 0.5))
    assert not violates(IMB, (0.6, 0.5))


def test_probes_are_always_present():
    assert [c.source for c in probes(INV)][0] == "probe:fixed"
    assert len(probes(MON)) == 1 and len(probes(IMB)) == 1


def test_mae_breaks_invariance_on_cubic_probe():
    v = check_invariance("mae", 1, 7)
    assert v.verdict == "ViolationFound"
    assert v.violation.case.source == "probe:fixed"
    assert replay(v)


def test_accuracy_probes():
    mon = check_monotonicity("accuracy", 1, 7)
    imb = check_imbalance("accuracy", 1, 7)
    assert mon.violation.case.source == imb.violation.case.source == "probe:fixed"
    assert mon.violation.scores[0] == mon.violation.scores[1]
    assert imb.violation.scores == (0.75, 0.75)


@pytest.mark.parametrize(
    "metric,prop",
    [("accuracy", INV), ("cem_ord", INV), ("cem_ord", MON), ("mae", MON), ("cem_ord", IMB), ("macro_mae", IMB)],
)
def test_no_violation_found(metric, prop):
    v = check_property([metric], prop, 300, 7)[0]
    assert v.verdict == "NoViolationFound", v.violation and v.violation.to_dict()


@pytest.mark.parametrize("prop", list(PropertyId))
def test_random_cases_respect_generator_contract(prop):
    for trial in range(200):
        case = random_case(prop, 11, trial)
        gold = np.array(case.gold)
        counts = np.bincount(gold, minlength=case.num_classes)
        assert MIN_CLASSES <= case.num_classes <= MAX_CLASSES
        assert 10 <= len(gold) <= 200
        assert (counts > 0).all()
        first, second = np.array(case.first), np.array(case.second)
        if prop is MON:
            changed = first != second
            assert changed.any()
            # moved toward gold, never past it
            assert (np.abs(second - gold)[changed] < np.abs(first - gold)[changed]).all()
            assert (np.sign(second - gold) * np.sign(first - gold) >= 0).all()
        elif prop is IMB:
            assert (first != gold).sum() == 1 and (second != gold).sum() == 1
            d1, d3 = int(np.flatnonzero(first != gold)[0]), int(np.flatnonzero(second != gold)[0])
            c1, c3, c2 = gold[d1], gold[d3], first[d1]
            assert second[d3] == c2 and abs(int(c1) - int(c3)) == 2 and c2 == (c1 + c3) // 2
            assert counts[c1] > counts[c3] >= 1
        else:
            assert case.transform is not None and case.first == case.second


def test_random_case_is_deterministic():
    assert random_case(MON, 3, 42) == random_case(MON, 3, 42)
    assert random_case(MON, 3, 42) != random_case(MON, 4, 42)


def test_label_metrics_see_identical_arrays_under_invariance():
    case = Case("x", 3, (0, 1, 2, 2), (0, 2, 2, 1), (0, 2, 2, 1), TransformSpec((0, 5, 9), "t"))
    first, second = evaluate_case("accuracy", INV, case)
    assert first == second
    first, second = evaluate_case("mae", INV, case)
    assert first != second


def test_undefined_cases_are_skipped():
    # constant system: pearson undefined
    case = Case("x", 3, (0, 1, 2), (1, 1, 1), (1, 1, 1), TransformSpec((0, 1, 2), "id"))
    assert evaluate_case("pearson", INV, case) is None


def test_every_violation_replays():
    table = audit_all(["accuracy", "mae", "pearson", "cohen_kappa", "cem_nom"], 200, 7)
    for v in table.verdicts:
        if v.violation is not None:
            assert replay(v), v.to_dict()


def test_audit_table_shape_and_determinism():
    a = audit_all(["accuracy", "cem_ord"], 100, 5)
    b = audit_all(["accuracy", "cem_ord"], 100, 5)
    assert a.to_dict() == b.to_dict()
    assert a.metrics == ["accuracy", "cem_ord"]
    assert a.pattern("accuracy") == EXPECTED_PATTERNS["accuracy"]
    assert a.pattern("cem_ord") == (True, True, True)
    assert a.pattern_mismatches() == {}
    assert "MISMATCH" not in a.render()


def test_parallel_audit_matches_serial():
    metrics = ["accuracy", "mae", "weighted_kappa_quadratic", "cem_ord"]
    for prop in PropertyId:
        serial = check_property(metrics, prop, 300, 9, jobs=1)
        parallel = check_property(metrics, prop, 300, 9, jobs=2)
        assert [v.to_dict() for v in serial] == [v.to_dict() for v in parallel]


def test_empty_audit():
    table = audit_all([], 10, 7)
    assert table.verdicts == [] and table.pattern_mismatches() == {}


def test_empty_class_diagnostic_breaks_cem_monotonicity():
    v = diagnose_empty_classes(["cem_ord"], 2000, 7)[0]
    assert v.verdict == "ViolationFound"
    assert dict(v.violation.case.params) == {"allow_empty": True}
    assert replay(v)
    counts = np.bincount(v.violation.case.gold, minlength=v.violation.case.num_classes)
    assert (counts == 0).any()


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        check_property(["accuracy"], INV, 0, 7)


def test_table_lookup_for_unlisted_metric():
    table = AuditTable(1, 7)
    assert table.pattern_mismatches() == {}
