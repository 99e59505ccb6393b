from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# criterion number -> (description, list of (check name, passed, seconds, budget))
ACCEPTANCE: dict[int, tuple[str, list]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        desc, checks = ACCEPTANCE[n]
        ok = all(c[1] for c in checks)
        failed = [c[0] for c in checks if not c[1]]
        secs = sum(c[2] for c in checks)
        budget = checks[0][3]
        note = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'} criterion {n}: {desc} [{secs:.2f}s / {budget:g}s]{note}"
        )
