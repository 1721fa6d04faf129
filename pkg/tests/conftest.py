"""Shared pytest plumbing.

The acceptance tests in ``test_acceptance.py`` register one line per
criterion here so a plain ``pytest -v`` run ends with a compact PASS/FAIL
scoreboard of the headline checks, independent of the usual pytest output.
"""

CRITERIA = [
    "stationary eigenvalue (case 5, h=1e-3, lambda in [3.10, 3.20], < 30 s)",
    "analytic eigenvalue convergence (order >= 1.9, extrapolation within 1e-3)",
    "heat-decay slope (|slope + sigma^2 pi^2/2| <= 0.05)",
    "fixed-point convergence (case 1, gaps < 1e-6 within 200 iterations)",
    "structure suite (positivity, mass monotone, H consistency, adjointness)",
    "energy pairing (case 1 eps in {0, 0.1}; stationary case 5)",
    "scaled-method equivalence (rel. error <= 1e-3 at T=0.5)",
    "turnpike (distance at T/2 strictly decreasing over T in {0.5, 1, 2})",
    "Monte Carlo cross-validation (survival + histogram within 3 SE)",
    "cost optimality (case 1, J(B_opt) < J(0))",
]

_registry: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, passed: bool, detail: str = "") -> bool:
    """Store one scoreboard line; returns ``passed`` for chaining into assert."""
    _registry[name] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not _registry:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in CRITERIA:
        if name in _registry:
            passed, detail = _registry[name]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "SKIP", "not run"
        tr.write_line(f"{status}  {name}" + (f"  --  {detail}" if detail else ""))
