import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthfaces import synthetic_face, write_fixture_dataset  # noqa: E402


@pytest.fixture(scope="session")
def face_pair():
    """One deterministic (source, reference) pair at 256×256."""
    src_img, src_par = synthetic_face(seed=11, size=256)
    ref_img, ref_par = synthetic_face(seed=47, size=256)
    return src_img, src_par, ref_img, ref_par


@pytest.fixture(scope="session")
def fixture_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("dataset")
    return write_fixture_dataset(root, n_pairs=4, size=128, seed=3)


def rand_image(seed: int, size: int = 64) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (size, size, 3)).astype(np.float32)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        name = report.nodeid.split("::")[-1]
        outcome = report.outcome.upper()
        print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)
