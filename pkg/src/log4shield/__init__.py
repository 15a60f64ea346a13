"""log4shield: static Log4j vulnerability scanner.

Checks Maven ``pom.xml`` files for vulnerable Log4j versions, deep-scans the
source tree for vulnerable class references, and ranks findings by CVSS base
score with remediation advice.
"""

__version__ = "0.1.0"
