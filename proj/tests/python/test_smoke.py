import json

import pytest

import biaslens as bl


def gender():
    return bl.FeatureScheme("gender", ["female", "male"])


def topic(name, female, window, target_female, target_total):
    run = bl.RankedRun(name, [f"{name}/{i}" for i in range(window)])
    labels = bl.LabelCatalog("gender")
    for i, entity in enumerate(run.entries):
        labels.assign(entity, "female" if i < female else "male")
    target = bl.TargetCounts(
        name, "gender",
        {"female": target_female, "male": target_total - target_female})
    return run, labels, target


def test_ratio_keeps_its_grid():
    r = bl.Ratio(4, 10)
    assert str(r) == "4/10"
    assert r == bl.Ratio(2, 5)
    assert not r.identical(bl.Ratio(2, 5))
    assert float(bl.Ratio.parse("-0.042")) == -0.042


def test_published_rows():
    run, labels, target = topic("archivist", 9, 10, 1, 10)
    rec = bl.bias_at_n(run, labels, target, gender(), "female", 10)
    assert str(rec.bias) == "8/10"
    run, labels, target = topic("announcer", 0, 10, 5, 10)
    rec = bl.bias_at_n(run, labels, target, gender(), "female", 10)
    assert str(rec.bias) == "-5/10"


def test_tie_goes_to_the_model():
    for k in (5, 6):
        ideal, delta = bl.ideal_target_ratio_at_n(
            bl.Ratio(1, 2), bl.Ratio(k, 11), 11)
        assert ideal == bl.Ratio(k, 11)
        assert delta == bl.Ratio(1, 2)


def test_unknowns_count_in_the_window():
    run = bl.RankedRun("t", ["a", "b", "c"])
    labels = bl.LabelCatalog("gender")
    labels.assign("a", "female")
    ratio, window, unknown = bl.model_ratio_at_n(run, labels, "female", 10)
    assert (str(ratio), window, unknown) == ("1/3", 3, 2)
    with pytest.raises(bl.BiaslensError):
        bl.model_ratio_at_n(run, labels, "female", 10, strict=True)


def test_simulate_round_trip_and_aggregate():
    records = []
    for i, b in enumerate((-3, 0, 2, 5)):
        run, labels, target = bl.simulate_run(
            gender(), "female", f"t{i}", bl.Ratio(1, 2), bl.Ratio(b, 10), 10)
        rec = bl.bias_at_n(run, labels, target, gender(), "female")
        assert rec.bias == bl.Ratio(b, 10)
        records.append(rec)
    s = bl.aggregate(records, "female")
    assert s.mb == pytest.approx(0.1)
    assert s.mab == pytest.approx(0.25)
    assert s.topic_count == 4


def test_parse_errors_carry_location():
    with pytest.raises(bl.ParseError, match="runs.tsv:2:"):
        bl.parse_runs("t1\t1\te1\nt1\t3\te2\n", "runs.tsv")
    runs = bl.parse_runs("t1\t1\te1\nt1\t2\te2\nt2\t1\te9\n")
    assert [len(r.entries) for r in runs] == [2, 1]


def test_evaluate_end_to_end(tmp_path):
    (tmp_path / "runs.tsv").write_text(
        "".join(f"t1\t{i + 1}\te{i}\n" for i in range(10)))
    (tmp_path / "labels.tsv").write_text(
        "".join(f"e{i}\tgender\t{'female' if i < 9 else 'male'}\n"
                for i in range(10)))
    (tmp_path / "targets.tsv").write_text(
        "t1\tgender\tfemale\t1\nt1\tgender\tmale\t9\n")
    report = bl.evaluate(tmp_path / "runs.tsv", tmp_path / "labels.tsv",
                         {"kb": tmp_path / "targets.tsv"})
    assert report["meta"]["schema"] == bl.REPORT_SCHEMA
    female = [s for s in report["summaries"] if s["value"] == "female"][0]
    assert female["max_exact"] == "8/10"
    json.dumps(report)
