import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from log4shield.deepscan import (
    Form,
    PatternHit,
    ScanFilter,
    deep_scan,
    detect_misconfiguration,
    is_scannable,
    match_patterns,
    scan_tree,
)
from log4shield.kb import default_kb
from log4shield.versions import VulnClass
from oracles import grep_hits

JNDI = "org.apache.logging.log4j.core.lookup.JndiLookup"
JMS = "org.apache.log4j.net.JMSAppender"


def hit(pid, file="A.java"):
    return PatternHit(file, 1, 1, pid, "x", Form.DOTTED)


class TestMatchPatterns:
    def test_jdbc(self):
        (m,) = match_patterns("new org.apache.log4j.jdbc.JDBCAppender()")
        assert m == ("JDBCAppender", 1, 5, "org.apache.log4j.jdbc.JDBCAppender", Form.DOTTED)

    def test_path_form(self):
        (m,) = match_patterns("org/apache/logging/log4j/core/lookup/JndiLookup.class")
        assert m[0] == "JndiLookup" and m[4] is Form.PATH_FORM
        assert m[3] == default_kb().rule("JndiLookup").dotted_form.replace(".", "/")

    def test_bare_name(self):
        assert match_patterns("JndiLookupHelper helper = new JndiLookupHelper();") == []

    def test_case_sensitive(self):
        assert match_patterns(JNDI.lower()) == []

    def test_config_reference(self):
        (m,) = match_patterns(f"log4j.appender.X={JMS}", config=True)
        assert m[4] is Form.CONFIG_REFERENCE

    def test_multiple_rules_one_line(self):
        found = match_patterns(f"{JMS} {JNDI} org.apache.log4j.chainsaw.Main")
        assert [m[0] for m in found] == ["JMSAppender", "JndiLookup", "Chainsaw"]

    def test_line_and_column(self):
        (m,) = match_patterns(f"a\nbb\n  import {JNDI};\n")
        assert m[1:3] == (3, 10)

    def test_columns_are_bytes(self):
        (m,) = match_patterns(f"é {JNDI}")
        assert m[2] == 4

    @given(st.text(max_size=60), st.text(max_size=60))
    def test_matched_text_verbatim(self, before, after):
        content = before + JNDI + after
        lines = content.encode("utf-8", "surrogateescape").split(b"\n")
        found = match_patterns(content)
        assert any(m[0] == "JndiLookup" for m in found)
        for pid, line, col, text, _ in found:
            raw = lines[line - 1]
            assert raw[col - 1:col - 1 + len(text.encode())] == text.encode()


class TestScannable:
    def test_binary_jar(self):
        assert not is_scannable("lib/big.jar", b"PK\x03\x04\0\0", size=10 * 1024 * 1024)

    def test_small_java(self):
        assert is_scannable("src/A.java", b"class A {}", size=2048)

    def test_git_dir(self):
        assert not is_scannable(".git/config", b"[core]", size=10)
        assert not is_scannable("sub/target/A.java", b"", size=10)

    def test_size_cap(self):
        f = ScanFilter(max_file_bytes=100)
        assert is_scannable("a.txt", b"x", f, size=100)
        assert not is_scannable("a.txt", b"x", f, size=101)

    def test_binary_detection_off(self):
        assert is_scannable("a.bin", b"\0", ScanFilter(binary_detection=False), size=1)

    def test_filter_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ScanFilter(max_file_bytes=0)


class TestDeepScan:
    def test_import_hit(self, write_tree):
        root = write_tree({"src/A.java": f"package x;\nimport {JNDI};\n"})
        (h,) = deep_scan(root)
        assert (h.file, h.line, h.column, h.pattern_id, h.form) == ("src/A.java", 2, 8, "JndiLookup", Form.DOTTED)

    def test_clean(self, write_tree):
        root = write_tree({"src/A.java": "import org.apache.logging.log4j.LogManager;\n", "README.md": "nothing"})
        assert deep_scan(root) == []

    def test_properties_config_reference(self, write_tree):
        root = write_tree({"conf/log4j.properties": f"log4j.rootLogger=INFO, X\nlog4j.appender.X={JMS}\n"})
        (h,) = deep_scan(root)
        assert (h.pattern_id, h.form, h.line) == ("JMSAppender", Form.CONFIG_REFERENCE, 2)

    def test_pom_excluded(self, write_tree):
        root = write_tree({"pom.xml": f"<x>{JNDI}</x>", "m/pom.xml": JNDI, "build.xml": JNDI})
        hits = deep_scan(root)
        assert [h.file for h in hits] == ["build.xml"]

    def test_ignored_dirs_and_binaries(self, write_tree):
        root = write_tree({
            "target/A.java": JNDI,
            ".git/x": JNDI,
            "lib/a.jar": b"PK\0\0" + JNDI.encode(),
            "src/B.java": JNDI,
        })
        res = scan_tree(root)
        assert [h.file for h in res.hits] == ["src/B.java"]
        assert res.files_skipped == 1

    def test_size_cap(self, write_tree):
        root = write_tree({"big.txt": JNDI + " " * 200, "small.txt": JNDI})
        assert [h.file for h in deep_scan(root, ScanFilter(max_file_bytes=100))] == ["small.txt"]

    def test_ignore_file(self, write_tree):
        root = write_tree({
            ".log4shieldignore": "# vendored\nvendor/\n*.generated.java\n",
            "vendor/lib/A.java": JNDI,
            "src/X.generated.java": JNDI,
            "src/Y.java": JNDI,
        })
        from log4shield.fswalk import load_ignore_file

        assert [h.file for h in deep_scan(root, ignore_patterns=load_ignore_file(root))] == ["src/Y.java"]

    def test_invalid_utf8(self, write_tree):
        root = write_tree({"A.java": b"\xff\xfe" + JNDI.encode() + b"\n"})
        (h,) = deep_scan(root)
        assert h.column == 3

    def test_order_and_parallel_determinism(self, write_tree):
        files = {f"d{i % 7}/F{i}.java": f"// {i}\n{JNDI}\n{JMS}\n" for i in range(150)}
        root = write_tree(files)
        serial = deep_scan(root, workers=1)
        parallel = deep_scan(root, workers=8)
        assert serial == parallel
        assert serial == sorted(serial, key=lambda h: h.sort_key)
        assert len(serial) == 300

    def test_unreadable_file_warns(self, write_tree, monkeypatch):
        root = write_tree({"a.txt": JNDI, "b.txt": JNDI})
        from pathlib import Path

        real = Path.read_bytes

        def flaky(self):
            if self.name == "a.txt":
                raise PermissionError(13, "Permission denied")
            return real(self)

        monkeypatch.setattr(Path, "read_bytes", flaky)
        res = scan_tree(root)
        assert [h.file for h in res.hits] == ["b.txt"]
        assert res.warnings == ["a.txt: Permission denied"]

    def test_matches_grep_oracle(self, write_tree):
        rules = default_kb().rules
        files = {}
        for i, r in enumerate(rules):
            files[f"src/p{i}/A.java"] = f"x\n  {r.dotted_form}; {r.path_form}\n"
            files[f"res/r{i}.xml"] = f"<a>{r.dotted_form}</a>\n\n{r.dotted_form}{r.dotted_form}"
        root = write_tree(files)
        needles = [f for r in rules for f in (r.dotted_form, r.path_form)]
        got = sorted((h.file, h.line, h.column, h.matched_text) for h in deep_scan(root))
        assert got == grep_hits(root, needles)

    @settings(max_examples=25, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.lists(st.sampled_from([JNDI, JMS, "noise", "org.apache.log4j.net.SocketServer"]), min_size=1, max_size=6))
    def test_monotone(self, tmp_path_factory, lines):
        root = tmp_path_factory.mktemp("mono")
        (root / "A.java").write_text(f"{JNDI}\n")
        before = set(deep_scan(root))
        (root / "B.java").write_text("\n".join(lines))
        after = set(deep_scan(root))
        assert before <= after
        assert not any(h.file.endswith("pom.xml") for h in after)


class TestMisconfiguration:
    def test_appender_without_version(self):
        seed = detect_misconfiguration([hit("JMSAppender")], None)
        assert seed is not None and seed.hits[0].pattern_id == "JMSAppender"

    def test_version_known(self):
        assert detect_misconfiguration([hit("JndiLookup")], VulnClass.V2_VULNERABLE) is None
        assert detect_misconfiguration([hit("JMSAppender")], VulnClass.NOT_VULNERABLE) is None

    def test_nothing(self):
        assert detect_misconfiguration([], None) is None

    def test_non_appender(self):
        assert detect_misconfiguration([hit("JndiLookup"), hit("SocketServer")], None) is None

    @pytest.mark.parametrize("pid", ["SMTPAppender", "JMSAppender", "JMSSink", "JDBCAppender", "Chainsaw"])
    def test_each_appender(self, pid):
        assert detect_misconfiguration([hit(pid)], None) is not None
