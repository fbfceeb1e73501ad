import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Mirror the acceptance PASS lines with a FAIL line when a gate breaks."""
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed and item.fspath.basename == "test_acceptance.py":
        print(f"\nACCEPTANCE {item.name}: FAIL - see traceback above")
