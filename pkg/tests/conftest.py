import numpy as np
import pytest

from slnsim import BathSpec, DriveSpec, EnsembleConfig, build_table

T_END = 2.0 * np.pi

_CRITERIA: list[tuple[str, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    """Log an acceptance-criterion outcome for the end-of-run summary."""
    status = "PASS" if passed else "FAIL"
    _CRITERIA.append((name, f"{status}{'  (' + detail + ')' if detail else ''}"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _CRITERIA:
        terminalreporter.write_line(f"  {name}: {status}")


@pytest.fixture(scope="session")
def operating_bath():
    """The cold-bath operating point used throughout."""
    return BathSpec(gamma=0.05, omega_c=10.0, beta=5.0)


@pytest.fixture(scope="session")
def small_config(operating_bath):
    """A cheap pair config on a 512-step grid."""
    return EnsembleConfig(
        bath=operating_bath,
        drive=DriveSpec(enabled=False),
        pair="z",
        n_realizations=2000,
        master_seed=1234,
        n_steps=512,
        batch_size=512,
    )


@pytest.fixture(scope="session")
def small_table(small_config):
    return build_table(small_config)
