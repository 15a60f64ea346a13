#!/usr/bin/env python3
"""Regenerate the fixture trees under tests/fixtures/.

    python scripts/make_fixtures.py

Writes the scenario trees (clean, mybatis-358, mirth, malformed-pom,
appender-no-pom) and the 25-entry evaluation corpus with its manifest.
The output is committed; rerun only after editing this script.
"""

from __future__ import annotations

import shutil
import textwrap
from pathlib import Path

import yaml

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

JNDI = "org.apache.logging.log4j.core.lookup.JndiLookup"



class _NoAliasDumper(yaml.SafeDumper):
    def ignore_aliases(self, data):
        return True


def _dump(entries: list) -> str:
    return yaml.dump({"entries": entries}, Dumper=_NoAliasDumper, sort_keys=False, width=100)

def pom(deps: list[dict], props: dict | None = None, modules: list[str] | None = None,
        managed: list[dict] | None = None, artifact: str = "app") -> str:
    def dep_xml(d, indent):
        lines = ["<dependency>", f"  <groupId>{d.get('group', 'org.apache.logging.log4j')}</groupId>",
                 f"  <artifactId>{d['artifact']}</artifactId>"]
        if d.get("version") is not None:
            lines.append(f"  <version>{d['version']}</version>")
        if d.get("scope"):
            lines.append(f"  <scope>{d['scope']}</scope>")
        if d.get("optional"):
            lines.append("  <optional>true</optional>")
        lines.append("</dependency>")
        return "\n".join(indent + line for line in lines)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<project xmlns="http://maven.apache.org/POM/4.0.0"',
        '         xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"',
        '         xsi:schemaLocation="http://maven.apache.org/POM/4.0.0 '
        'https://maven.apache.org/xsd/maven-4.0.0.xsd">',
        "  <modelVersion>4.0.0</modelVersion>",
        "  <groupId>org.example</groupId>",
        f"  <artifactId>{artifact}</artifactId>",
        "  <version>1.0.0</version>",
    ]
    if props:
        parts.append("  <properties>")
        parts += [f"    <{k}>{v}</{k}>" for k, v in props.items()]
        parts.append("  </properties>")
    if modules:
        parts.append("  <modules>")
        parts += [f"    <module>{m}</module>" for m in modules]
        parts.append("  </modules>")
    if managed:
        parts += ["  <dependencyManagement>", "    <dependencies>"]
        parts += [dep_xml(d, "      ") for d in managed]
        parts += ["    </dependencies>", "  </dependencyManagement>"]
    if deps:
        parts.append("  <dependencies>")
        parts += [dep_xml(d, "    ") for d in deps]
        parts.append("  </dependencies>")
    parts.append("</project>")
    return "\n".join(parts) + "\n"


MALFORMED_POM = """<?xml version="1.0" encoding="UTF-8"?>
<project>
  <modelVersion>4.0.0</modelVersion>
  <dependencies>
    <dependency>
      <groupId>org.apache.logging.log4j</groupId>
      <artifactId>log4j-core
"""

PLAIN_JAVA = textwrap.dedent("""\
    package org.example;

    import org.apache.logging.log4j.LogManager;
    import org.apache.logging.log4j.Logger;

    public class Service {
        private static final Logger LOG = LogManager.getLogger(Service.class);

        public void run(String user) {
            LOG.info("request from {}", user);
        }
    }
    """)

PLAIN_V1_JAVA = textwrap.dedent("""\
    package org.example;

    import org.apache.log4j.Logger;

    public class Channel {
        private static final Logger LOG = Logger.getLogger(Channel.class);

        public void send(String msg) {
            LOG.debug("sending " + msg);
        }
    }
    """)

JNDI_JAVA = textwrap.dedent(f"""\
    package org.example.lookup;

    import {JNDI};
    import org.apache.logging.log4j.core.config.plugins.util.PluginManager;

    public class LookupRegistry {{
        public void register(PluginManager manager) {{
            manager.collectPlugins();
            Object lookup = new JndiLookup();
        }}
    }}
    """)

CONSOLE_PROPS = textwrap.dedent("""\
    log4j.rootLogger=INFO, stdout
    log4j.appender.stdout=org.apache.log4j.ConsoleAppender
    log4j.appender.stdout.layout=org.apache.log4j.PatternLayout
    log4j.appender.stdout.layout.ConversionPattern=%d %-5p %c - %m%n
    """)


def appender_props(cls: str) -> str:
    return CONSOLE_PROPS + textwrap.dedent(f"""\
        log4j.logger.audit=WARN, remote
        log4j.appender.remote={cls}
        """)


JDBC_XML = textwrap.dedent("""\
    <?xml version="1.0" encoding="UTF-8" ?>
    <!DOCTYPE log4j:configuration SYSTEM "log4j.dtd">
    <log4j:configuration xmlns:log4j="http://jakarta.apache.org/log4j/">
      <appender name="db" class="org.apache.log4j.jdbc.JDBCAppender">
        <param name="URL" value="jdbc:h2:mem:audit"/>
        <param name="sql" value="INSERT INTO audit VALUES ('%m')"/>
      </appender>
      <root>
        <priority value="info"/>
        <appender-ref ref="db"/>
      </root>
    </log4j:configuration>
    """)

JMSSINK_JAVA = textwrap.dedent("""\
    package org.example.relay;

    public class Relay {
        public static void main(String[] args) throws Exception {
            org.apache.log4j.net.JMSSink.main(args);
        }
    }
    """)


def write(root: Path, files: dict[str, str | bytes]) -> None:
    for rel, content in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8")


def core(version, **kw):
    return {"artifact": "log4j-core", "version": version, **kw}


def v1(version, **kw):
    return {"group": "log4j", "artifact": "log4j", "version": version, **kw}


SCENARIOS = {
    "clean": {
        "pom.xml": pom([core("2.23.1"), {"group": "junit", "artifact": "junit", "version": "4.13.2", "scope": "test"}]),
        "src/main/java/org/example/Service.java": PLAIN_JAVA,
        "README.md": "Example project on a current Log4j 2 release.\n",
    },
    "mybatis-358": {
        "pom.xml": pom([core("2.14.1", optional=True), {"artifact": "log4j-api", "version": "2.14.1"}]),
        "src/main/java/org/example/Service.java": PLAIN_JAVA,
    },
    "mirth": {
        "pom.xml": pom([v1("1.2.16")]),
        "src/main/java/org/example/Channel.java": PLAIN_V1_JAVA,
        "conf/log4j.properties": CONSOLE_PROPS,
    },
    "malformed-pom": {
        "pom.xml": MALFORMED_POM,
        "src/main/java/org/example/lookup/LookupRegistry.java": JNDI_JAVA,
    },
    "appender-no-pom": {
        "conf/log4j.properties": appender_props("org.apache.log4j.net.JMSAppender"),
        "src/main/java/org/example/Channel.java": PLAIN_V1_JAVA,
    },
}

V2_14_1 = ["CVE-2021-44228", "CVE-2021-45046", "CVE-2021-45105", "CVE-2021-44832"]
V1_ALL = ["CVE-2019-17571", "CVE-2021-4104", "CVE-2022-23302", "CVE-2022-23305", "CVE-2022-23307"]

# (project, release, files, expected_verdict, expected_cves, extra manifest keys, notes)
CORPUS = [
    # v2 upgrade track through the December 2021 patch releases
    ("quillmap", "3.5.7", {"pom.xml": pom([core("2.14.1")]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", V2_14_1, {}, "pre-Log4Shell release"),
    ("quillmap", "3.5.8", {"pom.xml": pom([core("2.15.0")]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", ["CVE-2021-45046", "CVE-2021-45105", "CVE-2021-44832"], {}, "first, incomplete fix"),
    ("quillmap", "3.5.9", {"pom.xml": pom([core("2.16.0")]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", ["CVE-2021-45105", "CVE-2021-44832"], {}, "lookups disabled, recursion open"),
    ("quillmap", "3.5.10", {"pom.xml": pom([core("2.17.0")]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", ["CVE-2021-44832"], {}, "only the JDBC config RCE remains"),
    ("quillmap", "3.5.16", {"pom.xml": pom([core("2.23.1")]), "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "current release"),
    # Log4j 1.x residue, modelled on a Mirth-style migration
    ("ledgerline", "3.9.0",
     {"pom.xml": pom([v1("1.2.16")]), "conf/log4j.properties": appender_props("org.apache.log4j.net.JMSAppender"),
      "src/Channel.java": PLAIN_V1_JAVA},
     "vulnerable", V1_ALL, {}, "1.x with JMSAppender configured"),
    ("ledgerline", "3.10.0",
     {"pom.xml": pom([v1("1.2.16")]), "conf/log4j.properties": CONSOLE_PROPS, "src/Channel.java": PLAIN_V1_JAVA},
     "not_vulnerable", [], {"strict": True}, "1.x present but no vulnerable appender in use"),
    ("ledgerline", "3.11.0",
     {"pom.xml": pom([v1("1.2.17")]), "conf/log4j.xml": JDBC_XML, "src/Channel.java": PLAIN_V1_JAVA},
     "vulnerable", ["CVE-2022-23305"], {"strict": True}, "JDBCAppender configured"),
    ("ledgerline", "3.12.0",
     {"pom.xml": pom([core("2.17.1"), {"group": "org.slf4j", "artifact": "log4j-over-slf4j", "version": "1.7.36"}]),
      "src/Channel.java": PLAIN_V1_JAVA},
     "not_vulnerable", [], {"exclude_artifacts": ["log4j-over-slf4j"]}, "bridge shim left behind after migration"),
    ("ledgerline", "4.0.0",
     {"pom.xml": pom([core("${log4j2.version}")], props={"log4j2.version": "2.17.2"}),
      "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "version pinned through a property"),
    # multi-module builds with versions managed in the parent
    ("streamforge", "1.12.0",
     {"pom.xml": pom([], props={"log4j.version": "2.12.1"}, modules=["core", "web"],
                     managed=[core("${log4j.version}")]),
      "core/pom.xml": pom([core(None)], artifact="core"), "web/pom.xml": pom([core(None)], artifact="web"),
      "core/src/Service.java": PLAIN_JAVA},
     "vulnerable", V2_14_1 + ["CVE-2020-9488"], {}, "managed 2.12.1, children inherit"),
    ("streamforge", "1.12.4",
     {"pom.xml": pom([], props={"log4j.version": "2.12.4"}, modules=["core"], managed=[core("${log4j.version}")]),
      "core/pom.xml": pom([core(None)], artifact="core"), "core/src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "Java 7 security backport"),
    ("streamforge", "1.13.0",
     {"pom.xml": pom([], props={"log4j.version": "2.3.2"}, modules=["core"], managed=[core("${log4j.version}")]),
      "core/pom.xml": pom([core(None)], artifact="core"), "core/src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "Java 6 security backport"),
    ("streamforge", "1.14.0",
     {"pom.xml": pom([core("2.17.1")]), "target/classes/META-INF/maven/pom.xml": pom([core("2.14.1")]),
      "target/classes/org/example/lookup/LookupRegistry.java": JNDI_JAVA, "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "stale build output under target/"),
    ("streamforge", "1.15.0",
     {"pom.xml": pom([core("2.17.1")]), ".log4shieldignore": "# vendored sample, never built\nlegacy/\n",
      "legacy/pom.xml": pom([v1("1.2.17")]), "legacy/conf/log4j.properties": appender_props(
          "org.apache.log4j.net.SocketServer"), "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "ignored vendored directory"),
    # source drops without a usable Maven build
    ("pulsebridge", "0.1.0", {"src/LookupRegistry.java": JNDI_JAVA},
     "vulnerable", ["CVE-2021-44228", "CVE-2021-45046"], {}, "no pom, JndiLookup imported"),
    ("pulsebridge", "0.2.0",
     {"conf/log4j.properties": appender_props("org.apache.log4j.net.SMTPAppender"), "src/Service.java": PLAIN_JAVA},
     "vulnerable", ["CVE-2020-9488", "Potential misconfiguration"], {}, "no pom, SMTP appender configured"),
    ("pulsebridge", "0.3.0", {"src/Service.java": PLAIN_JAVA, "README.md": "Mentions JndiLookup only in prose.\n"},
     "not_vulnerable", [], {}, "no pom, clean sources"),
    ("pulsebridge", "0.4.0", {"pom.xml": MALFORMED_POM, "src/Relay.java": JMSSINK_JAVA},
     "vulnerable", ["CVE-2022-23302", "Potential misconfiguration"], {}, "broken pom, JMSSink used"),
    ("pulsebridge", "0.5.0", {"pom.xml": MALFORMED_POM, "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "broken pom, clean sources"),
    # odd version declarations
    ("orbitcache", "2.0.0", {"pom.xml": pom([core("2.0-beta9")]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", V2_14_1 + ["CVE-2020-9488"], {}, "first vulnerable beta"),
    ("orbitcache", "2.1.0",
     {"pom.xml": pom([{"artifact": "log4j-api", "version": "2.16.0", "scope": "test"}]), "src/Service.java": PLAIN_JAVA},
     "vulnerable", ["CVE-2021-45105", "CVE-2021-44832"], {}, "test-scoped dependency still flagged"),
    ("orbitcache", "2.2.0", {"pom.xml": pom([core("[2.0,2.15)")]), "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "version range: undetermined, deep scan clean"),
    ("orbitcache", "2.3.0",
     {"pom.xml": pom([core("2.17.1")]), "docs/SECURITY.md": "We removed every JndiLookup usage.\n",
      "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "prose mention, initial scan only"),
    ("orbitcache", "2.4.0",
     {"pom.xml": MALFORMED_POM, "lib/shaded.jar": b"PK\x03\x04\x00\x00" + JNDI.replace(".", "/").encode() + b".class\x00",
      "src/Service.java": PLAIN_JAVA},
     "not_vulnerable", [], {}, "class name only inside a binary archive"),
]


TABLE_I_PROJECTS = [
    "apache-spark", "arduino-ide", "apache-hive", "apache-wicket", "mybatis-3", "netty", "mirth-connect",
    "elasticsearch", "log4j2", "phoss-smp", "apache-pulsar", "apache-tapestry", "apache-nifi",
    "apache-traffic-control", "apache-skywalking", "apache-ofbiz", "apache-jmeter", "apache-jena", "apache-geode",
    "apache-fortress", "apache-druid", "apache-calcite-avatica", "apache-archiva", "apache-tika", "apache-solr",
    "apache-flink", "apache-eventmesh", "apache-ozone",
]
# illustrative placement of the 7 false positives and 5 wrong-CVE reports
RECORDED_ERRORS = {
    ("mirth-connect", 1): "fp", ("mirth-connect", 2): "fp", ("mirth-connect", 3): "fp",
    ("apache-spark", 2): "fp", ("apache-spark", 3): "fp", ("apache-spark", 4): "fp",
    ("mybatis-3", 4): "fp",
    ("apache-pulsar", 4): "cve", ("apache-pulsar", 5): "cve",
    ("apache-flink", 3): "cve", ("apache-solr", 4): "cve", ("apache-druid", 3): "cve",
}


def recorded_entries() -> list[dict]:
    entries = []
    for project in TABLE_I_PROJECTS:
        for release in range(1, 6):
            # earlier releases predate the fixes, the last two are patched
            vulnerable = release <= 3
            kind = RECORDED_ERRORS.get((project, release))
            expected = "vulnerable" if vulnerable else "not_vulnerable"
            cves = ["CVE-2021-44228", "CVE-2021-45046"] if vulnerable else []
            if kind == "fp":
                expected, cves = "not_vulnerable", []
                recorded = {"verdict": "vulnerable", "cves": ["CVE-2021-4104"]}
            elif kind == "cve":
                expected, cves = "vulnerable", ["CVE-2021-44832"]
                recorded = {"verdict": "vulnerable", "cves": ["CVE-2021-45105", "CVE-2021-44832"]}
            else:
                recorded = {"verdict": expected, "cves": cves}
            entries.append({"name": f"{project}-r{release}", "project": project, "expected_verdict": expected,
                            "expected_cves": cves, "recorded": recorded})
    return entries


def main() -> None:
    if OUT.exists():
        for child in ("scenarios", "corpus"):
            shutil.rmtree(OUT / child, ignore_errors=True)
    for name, files in SCENARIOS.items():
        write(OUT / "scenarios" / name, files)

    entries = []
    for project, release, files, verdict, cves, extra, notes in CORPUS:
        rel = f"{project}/{release}"
        write(OUT / "corpus" / rel, files)
        entry = {"name": f"{project}-{release}", "project": project, "path": rel,
                 "expected_verdict": verdict, "expected_cves": sorted(cves), "notes": notes}
        entry.update(extra)
        entries.append(entry)
    header = "# 5 synthetic projects x 5 releases. Regenerate with scripts/make_fixtures.py.\n"
    (OUT / "corpus" / "manifest.yaml").write_text(
        header + _dump(entries), encoding="utf-8"
    )
    header = ("# Recorded outcomes of 140 scans (28 projects x 5 releases): 128 correct, 7 false positives,\n"
              "# 5 wrong CVE sets. Scored without scanning; regenerate with scripts/make_fixtures.py.\n")
    (OUT / "recorded_140.yaml").write_text(
        header + _dump(recorded_entries()), encoding="utf-8"
    )


if __name__ == "__main__":
    main()
