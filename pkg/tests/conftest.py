from __future__ import annotations

from collections import defaultdict

# criterion number -> list of (part, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)

TITLES = {
    1: "moment identity",
    2: "biorthonormality",
    3: "kernel projection and trace",
    4: "special-time reduction and CD form",
    5: "Hermite limit of the scaled kernel",
    6: "fig1 density profile",
    7: "fig4 widths and slopes",
    8: "partition function vs moment-determinant oracle",
    9: "BBO normalization and Chapman-Kolmogorov",
    10: "survival-probability limit",
    11: "Monte Carlo cross-validation",
    12: "gap-probability oracle",
    13: "density-form equivalences",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(TITLES):
        parts = ACCEPTANCE.get(k)
        if not parts:
            tr.write_line(f"criterion {k:2d} NOT RUN  {TITLES[k]}")
            continue
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}     {TITLES[k]}")
        for part, passed, detail in parts:
            tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {part}: {detail}")
