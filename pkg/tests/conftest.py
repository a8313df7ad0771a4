import numpy as np
import pytest

from arbary import centroid, classify
from arbary.spectral import Psd, make_grid, normalize

# Suite-wide records: every optimizer run and every multi-start report made
# by any test. Checked by test_zz_suite_invariants.py, which runs last.
FIT_RECORDS = []  # (iterates_stable, n_iterates, final model stable)
GAP_RECORDS = []
ACCEPTANCE_LINES = []  # PASS/FAIL lines from test_acceptance.py


def _install_recorders():
    orig_fit, orig_ms = centroid.fit, centroid.multi_start_fit

    def recording_fit(*args, **kwargs):
        res = orig_fit(*args, **kwargs)
        FIT_RECORDS.append((res.iterates_stable, len(res.trace), res.model.is_stable()))
        return res

    def recording_ms(*args, **kwargs):
        report = orig_ms(*args, **kwargs)
        GAP_RECORDS.append(report.suboptimality_gap)
        return report

    centroid.fit = recording_fit
    centroid.multi_start_fit = recording_ms
    classify.multi_start_fit = recording_ms


_install_recorders()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    if FIT_RECORDS:
        n_it = sum(r[1] for r in FIT_RECORDS)
        ok = all(r[0] and r[2] for r in FIT_RECORDS)
        terminalreporter.write_line(f"optimizer runs: {len(FIT_RECORDS)}, iterates: {n_it}, all stable: {ok}")
    if GAP_RECORDS:
        terminalreporter.write_line(f"multi-start reports: {len(GAP_RECORDS)}, min gap: {min(GAP_RECORDS):.3e}")


def random_psd(rng, n, floor=1e-3):
    return normalize(Psd(make_grid(n), rng.random(n) + floor))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
