from criteria import NAMES, RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(NAMES):
        if n in RESULTS:
            ok, detail = RESULTS[n]
            terminalreporter.write_line(f"C{n:<2} {'PASS' if ok else 'FAIL'}  {NAMES[n]}: {detail}")
        else:
            terminalreporter.write_line(f"C{n:<2} SKIP  {NAMES[n]}")
