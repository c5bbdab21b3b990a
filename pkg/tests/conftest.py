import numpy as np
import pytest

from pbdetect.dataio import ActivityType, Cohort, SyntheticSpec, generate_synthetic
from pbdetect.windowing import Frame, Padding

SMALL_SPEC = SyntheticSpec(n_healthy=4, n_cp=6, two_trial_healthy=2, two_trial_cp=4)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(SMALL_SPEC)


@pytest.fixture(scope="session")
def default_dataset():
    return generate_synthetic(SyntheticSpec())


def make_frame(data, padded_len=0, raters=None, cohort=Cohort.CP, padding=Padding.ZERO):
    data = np.asarray(data, dtype=np.float64)
    W = data.shape[0]
    if raters is None:
        raters = np.zeros((4, W), dtype=np.int8)
    return Frame(data, "S01", cohort, ActivityType.BEND_DOWN, 0, padded_len, np.asarray(raters, np.int8), padding)


ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in sorted(ACCEPTANCE, key=lambda r: (int(r[0].split()[0]), r[0])):
        terminalreporter.write_line(f"{verdict} criterion {name}: {detail}")
