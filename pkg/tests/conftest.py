import pytest

from snspd_he import fixtures
from snspd_he.core import FilmState, FluenceCurveParams, WireGeometry


@pytest.fixture
def film():
    return FilmState(
        critical_temperature=8.0,
        sheet_resistance=300.0,
        thermal_conductivity=0.1,
        specific_heat_volumetric=2000.0,
        thickness=8e-9,
        coupling_sigma=210.0,
    )


@pytest.fixture
def geom():
    return WireGeometry(length=25.8e-6, width=250e-9, thickness=8e-9, substrate_temperature=1.0)


@pytest.fixture
def curve_params():
    return FluenceCurveParams(r0=300.0, defect_rate=1e-4, saturation_fluence=8000.0,
                              ivry_prefactor_A=20000.0, ivry_exponent_B=1.0057)


@pytest.fixture(scope="session")
def standard():
    """Calibrated film, device geometry, simulation geometry and solver."""
    return (fixtures.standard_film(), fixtures.device_geometry(), fixtures.simulation_geometry(),
            fixtures.standard_solver())


# -- acceptance report ---------------------------------------------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    if hasattr(report, "wasxfail"):
        status = "XFAIL" if report.skipped else "XPASS"
    else:
        status = "PASS" if report.passed else "FAIL"
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[str(marker.args[0])] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: (int(s.split()[0].rstrip("abcdefghijklmnopqrstuvwxyz")), s)):
        status, detail = _CRITERIA[label]
        terminalreporter.write_line(f"criterion {label}: {status}  {detail}")
