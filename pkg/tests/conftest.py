import functools

import numpy as np
import pytest

from wsmquant.imageio import RgbImage


@functools.lru_cache(maxsize=None)
def natural(name: str) -> RgbImage:
    """Photographs shipped with scikit-image / scikit-learn (no downloads)."""
    if name in ("china", "flower"):
        from sklearn.datasets import load_sample_image

        arr = load_sample_image(f"{name}.jpg")
    else:
        from skimage import data

        arr = getattr(data, name)()
    return RgbImage(np.ascontiguousarray(arr[..., :3], dtype=np.uint8))


def crop(image: RgbImage, size: int) -> RgbImage:
    h, w = image.height, image.width
    top, left = (h - min(h, size)) // 2, (w - min(w, size)) // 2
    return RgbImage(image.pixels[top : top + size, left : left + size].copy())


def random_image(rng, h, w, levels=256) -> RgbImage:
    px = rng.integers(0, levels, (h, w, 3)) * (255 // max(1, levels - 1))
    return RgbImage(px.astype(np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def astronaut():
    return natural("astronaut")


@pytest.fixture(scope="session")
def small_photo():
    return crop(natural("astronaut"), 96)


# one PASS/FAIL line per acceptance criterion, printed after the run

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.skipped:
            status = "SKIP"
            if not detail and isinstance(report.longrepr, tuple):
                detail = report.longrepr[2].removeprefix("Skipped: ")
        else:
            status = "PASS" if report.passed else "FAIL"
        _ACCEPTANCE[number] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
