import json

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from log4shield.evaluation import (
    CorpusEntry,
    CorpusManifest,
    ManifestError,
    Outcome,
    load_manifest,
    render_eval,
    run_corpus,
    score_entry,
)
from log4shield.pipeline import Verdict

V, NV = Verdict.VULNERABLE, Verdict.NOT_VULNERABLE


def entry(name="e", expected=V, cves=None, recorded=None, recorded_cves=()):
    return CorpusEntry(
        name=name,
        expected_verdict=expected,
        expected_cves=frozenset(cves) if cves is not None else None,
        recorded_verdict=recorded,
        recorded_cves=frozenset(recorded_cves) if recorded is not None else None,
    )


class TestScoreEntry:
    def test_false_positive(self):
        assert score_entry(entry(expected=NV), V, frozenset({"CVE-2021-4104"})).outcome is Outcome.FALSE_POSITIVE

    def test_false_negative(self):
        assert score_entry(entry(expected=V), NV, frozenset()).outcome is Outcome.FALSE_NEGATIVE

    def test_wrong_cves(self):
        r = score_entry(entry(cves={"CVE-2021-44228", "CVE-2021-45046"}), V, frozenset({"CVE-2021-44228", "CVE-2021-45105"}))
        assert r.outcome is Outcome.WRONG_CVES
        assert r.added_cves == ("CVE-2021-45105",) and r.missing_cves == ("CVE-2021-45046",)

    def test_verdict_only_without_expected_cves(self):
        assert score_entry(entry(cves=None), V, frozenset({"anything"})).outcome is Outcome.CORRECT

    def test_correct(self):
        assert score_entry(entry(expected=NV, cves=set()), NV, frozenset()).outcome is Outcome.CORRECT


class TestRunCorpus:
    def test_fixture_corpus_all_correct(self, fixtures):
        m = load_manifest(fixtures / "corpus/manifest.yaml")
        assert len(m.entries) == 25
        assert {k: len(v) for k, v in m.projects().items()} == {p: 5 for p in m.projects()}
        assert len(m.projects()) == 5
        res = run_corpus(m)
        bad = [(r.name, r.outcome.value, r.added_cves, r.missing_cves) for r in res.per_entry if r.outcome is not Outcome.CORRECT]
        assert bad == []
        assert res.accuracy == 1.0

    def test_fixture_corpus_has_vulnerable_and_clean(self, fixtures):
        m = load_manifest(fixtures / "corpus/manifest.yaml")
        verdicts = {e.expected_verdict for e in m.entries}
        assert verdicts == {V, NV}

    def test_recorded_140(self, fixtures):
        res = run_corpus(load_manifest(fixtures / "recorded_140.yaml"))
        assert (res.total, res.correct, res.false_positives, res.false_negatives, res.wrong_cves) == (140, 128, 7, 0, 5)
        assert res.accuracy == 0.914
        assert "91.4%" in render_eval(res).decode()

    def test_recorded_140_covers_table_i(self, fixtures):
        m = load_manifest(fixtures / "recorded_140.yaml")
        assert len(m.projects()) == 28
        assert all(len(v) == 5 for v in m.projects().values())

    def test_missing_path_errors(self, tmp_path):
        m = CorpusManifest((CorpusEntry("gone", V, path=tmp_path / "nope"), entry("ok", V, recorded=V)))
        res = run_corpus(m)
        assert res.errored == 1 and res.total == 1 and res.accuracy == 1.0
        gone = next(r for r in res.per_entry if r.name == "gone")
        assert gone.outcome is Outcome.ERROR and "missing path" in gone.error

    def test_empty(self):
        res = run_corpus(CorpusManifest(()))
        assert res.accuracy is None and res.total == 0
        assert b"error" in render_eval(res)

    def test_deterministic(self, fixtures):
        m = load_manifest(fixtures / "corpus/manifest.yaml")
        assert run_corpus(m) == run_corpus(m)

    def test_sorted_by_name(self):
        m = CorpusManifest(tuple(entry(n, V, recorded=V) for n in ["b", "c", "a"]))
        assert [r.name for r in run_corpus(m).per_entry] == ["a", "b", "c"]

    @given(st.lists(st.sampled_from(["ok", "fp", "fn", "wc", "err"]), max_size=40))
    def test_accuracy_identity(self, kinds):
        entries = []
        for i, k in enumerate(kinds):
            name = f"e{i:03d}"
            if k == "ok":
                entries.append(entry(name, V, recorded=V))
            elif k == "fp":
                entries.append(entry(name, NV, recorded=V))
            elif k == "fn":
                entries.append(entry(name, V, recorded=NV))
            elif k == "wc":
                entries.append(entry(name, V, cves={"A"}, recorded=V, recorded_cves={"B"}))
            else:
                entries.append(CorpusEntry(name, V, path=None))
        res = run_corpus(CorpusManifest(tuple(entries)))
        assert res.correct + res.false_positives + res.false_negatives + res.wrong_cves == res.total
        assert res.total == len(kinds) - kinds.count("err")
        assert (res.correct, res.false_positives, res.false_negatives, res.wrong_cves) == tuple(kinds.count(k) for k in ["ok", "fp", "fn", "wc"])
        if res.total:
            assert res.accuracy == round(res.correct / res.total, 3)
        else:
            assert res.accuracy is None


class TestManifest:
    def write(self, tmp_path, doc):
        p = tmp_path / "m.yaml"
        p.write_text(yaml.safe_dump(doc) if not isinstance(doc, str) else doc)
        return p

    def test_relative_paths(self, tmp_path):
        (tmp_path / "proj").mkdir()
        m = load_manifest(self.write(tmp_path, {"entries": [{"name": "a", "path": "proj", "expected_verdict": "not vulnerable"}]}))
        assert m.entries[0].path == tmp_path / "proj"
        assert m.entries[0].expected_verdict is NV

    def test_duplicate_names(self, tmp_path):
        doc = {"entries": [{"name": "a", "path": "x", "expected_verdict": "vulnerable"}] * 2}
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(self.write(tmp_path, doc))

    @pytest.mark.parametrize(
        "doc",
        [
            "entries: [",
            {"nope": []},
            {"entries": [{"name": "a"}]},
            {"entries": [{"name": "a", "expected_verdict": "vulnerable"}]},
            {"entries": [{"name": "a", "path": "x", "expected_verdict": "maybe"}]},
        ],
    )
    def test_invalid(self, tmp_path, doc):
        with pytest.raises(ManifestError):
            load_manifest(self.write(tmp_path, doc))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "absent.yaml")


class TestRender:
    def test_cve_diff_text(self):
        m = CorpusManifest((entry("x", V, cves={"A", "B"}, recorded=V, recorded_cves={"B", "C"}),))
        text = render_eval(run_corpus(m)).decode()
        assert "added={C}" in text and "missing={A}" in text

    def test_json_mirrors_result(self, fixtures):
        res = run_corpus(load_manifest(fixtures / "recorded_140.yaml"))
        doc = json.loads(render_eval(res, "json"))
        assert doc["accuracy"] == 0.914 and doc["correct"] == 128
        assert len(doc["per_entry"]) == 140
        assert set(doc["per_entry"][0]["cve_diff"]) == {"added", "missing"}

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render_eval(run_corpus(CorpusManifest(())), "xml")
