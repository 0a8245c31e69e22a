import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmcs import solar
from nmcs.solar import (
    DomainError,
    ParseError,
    RadiativeModel,
    flux_integral,
    informed_starts,
    load_spectrum,
    make_stack,
    mj_efficiency,
    objective_for,
    optimal_cell_power,
    radiative_current,
    ss_efficiency,
    ss_operating_points,
    voltage_for_current,
)

# reference values computed independently before the build:
# photon count by trapezoid in wavelength space, I * lambda / (h c);
# J_r by scipy.integrate.quad at relative tolerance 1e-13;
# single-cell power by a 1e-4 V grid over quad-integrated J_r
ORACLE_PHOTONS_ABOVE_1_12 = 2.7344507582680316e21
ORACLE_JR_1_12_V0 = 8.23023548394044e-13
ORACLE_JR_1_4_V1 = 1.5874261368784393
ORACLE_SI_ETA = 0.33389491475185423


@pytest.fixture(scope="module")
def table():
    return load_spectrum(solar.default_spectrum_path())


@pytest.fixture(scope="module")
def stack3(table):
    return make_stack(3, "ss", table)


@pytest.fixture(scope="module")
def model():
    return RadiativeModel()


def write(tmp_path, text):
    path = tmp_path / "spec.csv"
    path.write_text(text)
    return path


# ---- spectrum ingestion

def test_toy_spectrum(tmp_path):
    t = load_spectrum(write(tmp_path, "wavelength_nm,irradiance\n500,1\n1000,1\n"))
    assert t.p_in == pytest.approx(500.0)
    assert t.energy_grid[0] == pytest.approx(1.2398419)
    assert np.all(np.diff(t.energy_grid) > 0)


def test_spectrum_comments_and_header(tmp_path):
    t = load_spectrum(write(tmp_path, "# comment\nlam,I\n# another\n1000,2\n500,1\n"))
    assert t.p_in == pytest.approx(750.0)


@pytest.mark.parametrize("text", ["", "# only comments\n", "a,b\n", "500,1\n600,x\n", "500\n600\n"])
def test_spectrum_parse_errors(tmp_path, text):
    with pytest.raises(ParseError):
        load_spectrum(write(tmp_path, text))


@pytest.mark.parametrize("text", ["0,1\n500,1\n", "500,-1\n600,1\n"])
def test_spectrum_domain_errors(tmp_path, text):
    with pytest.raises(DomainError):
        load_spectrum(write(tmp_path, text))


def test_fixture_power_consistency(table):
    power = np.trapezoid(table.energy_grid * table.photon_flux * solar.Q, table.energy_grid)
    assert power == pytest.approx(table.p_in, rel=1e-3)
    assert table.p_in == pytest.approx(1000.4, abs=1.0)


# ---- photocurrent

def test_flux_zero_width(table):
    assert flux_integral(table, 1.5, 1.5) == 0.0


def test_flux_rejects_nonpositive(table):
    with pytest.raises(DomainError):
        flux_integral(table, 0.0, 1.0)


def test_flux_total_is_sum_of_parts(table):
    total = flux_integral(table, table.e_min, table.e_max)
    cuts = [table.e_min, 0.7, 1.1, 1.1, 2.3, 3.9, table.e_max]
    parts = sum(flux_integral(table, a, b) for a, b in zip(cuts, cuts[1:]))
    assert parts == pytest.approx(total, rel=1e-13)


def test_silicon_photocurrent(table):
    jg = flux_integral(table, 1.12)
    assert 430 <= jg <= 440
    assert jg / solar.Q == pytest.approx(ORACLE_PHOTONS_ABOVE_1_12, rel=0.05)
    assert jg / solar.Q == pytest.approx(2.7e21, rel=0.05)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 3.99), min_size=1, max_size=10))
def test_band_partition_additivity(gaps):
    t = load_spectrum(solar.default_spectrum_path()) if not hasattr(test_band_partition_additivity, "t") else test_band_partition_additivity.t
    test_band_partition_additivity.t = t
    g = np.sort(gaps)
    bands = solar._band_currents(make_stack(len(g), "ss", t), g)
    assert bands.sum() == pytest.approx(flux_integral(t, g[0]), rel=1e-12, abs=1e-12)


# ---- radiative current

def test_radiative_current_model_defaults(model):
    assert model.kT == pytest.approx(0.025852, abs=1e-6)
    assert model.prefactor == pytest.approx(1.5835e8, rel=1e-4)


@pytest.mark.parametrize("method", ["series", "simpson"])
def test_radiative_current_oracle(model, method):
    assert radiative_current(model, 1.12, 0.0, method) == pytest.approx(ORACLE_JR_1_12_V0, rel=1e-9)
    assert radiative_current(model, 1.4, 1.0, method) == pytest.approx(ORACLE_JR_1_4_V1, rel=1e-9)


def test_radiative_current_vanishes_at_4ev(model):
    assert radiative_current(model, 4.0, 0.0) < 1e-50
    assert radiative_current(model, 4.0, 0.0, "simpson") < 1e-50


def test_radiative_current_divergence(model):
    with pytest.raises(DomainError):
        radiative_current(model, 1.0, 1.0)
    with pytest.raises(DomainError):
        radiative_current(model, 1.0, 1.2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.9), st.floats(0.0, 0.999))
def test_series_matches_simpson(e_lo, frac):
    m = RadiativeModel()
    v = frac * e_lo
    assert radiative_current(m, e_lo, v) == pytest.approx(radiative_current(m, e_lo, v, "simpson"), rel=1e-8)


def test_radiative_current_monotone(model):
    volts = np.linspace(0, 1.0, 60)
    jr = [radiative_current(model, 1.1, v) for v in volts]
    assert np.all(np.diff(jr) > 0)
    assert radiative_current(model, 1.1, 0.5) < radiative_current(model, 1.1, 0.6)
    gaps = np.linspace(0.6, 3.5, 60)
    jr = [radiative_current(model, e, 0.3) for e in gaps]
    assert np.all(np.diff(jr) < 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.9), st.floats(-30, 10))
def test_voltage_inversion(e_lo, log_j):
    m = RadiativeModel()
    j = math.exp(log_j)
    v = voltage_for_current(m, e_lo, j)
    assert v < e_lo
    assert radiative_current(m, e_lo, v) == pytest.approx(j, rel=1e-9)


def test_voltage_inversion_unreachable(model):
    with pytest.raises(DomainError):
        voltage_for_current(model, 1.0, 1e30)


# ---- single cell and stacks

def test_empty_band_gives_no_power(stack3):
    assert optimal_cell_power(stack3, 5.0, 6.0) == (0.0, 0.0)


def test_silicon_like_cell(stack3):
    v, p = optimal_cell_power(stack3, 1.12)
    eta = p / stack3.spectrum.p_in
    assert 0.30 <= eta <= 0.35
    assert eta == pytest.approx(ORACLE_SI_ETA, abs=1e-6)
    assert v == pytest.approx(0.7874, abs=2e-4)


def test_power_never_negative(stack3):
    for e in np.linspace(0.01, 3.99, 25):
        assert optimal_cell_power(stack3, e)[1] >= 0


def test_single_cell_reduction(table):
    one = make_stack(1, "ss", table)
    assert ss_efficiency(one, [1.12]) == pytest.approx(optimal_cell_power(one, 1.12)[1] / table.p_in, rel=1e-9)
    assert mj_efficiency(make_stack(1, "mj", table), [1.12]) == pytest.approx(
        ss_efficiency(one, [1.12]), rel=1e-7)


def test_operating_points_consistent(stack3):
    pts = ss_operating_points(stack3, [0.93, 1.41, 2.06])
    assert sum(p.efficiency_share for p in pts) == pytest.approx(ss_efficiency(stack3, [0.93, 1.41, 2.06]))
    for p in pts:
        assert p.j_net == pytest.approx(p.j_gen - p.j_rad)
        assert 0 <= p.voltage < p.gap_interval[0]


def test_duplicate_gap_adds_nothing(stack3):
    assert ss_efficiency(stack3, [1.0, 1.0, 1.8]) == pytest.approx(ss_efficiency(stack3, [1.0, 1.8]), rel=1e-12)


def test_zero_band_kills_series_stack(table):
    mj = make_stack(3, "mj", table)
    assert mj_efficiency(mj, [1.0, 1.0, 1.8]) == 0.0


def test_permutation_invariance(table):
    g = [2.1, 0.9, 1.5, 1.2]
    for topology, fn in (("ss", ss_efficiency), ("mj", mj_efficiency)):
        s = make_stack(4, topology, table)
        assert fn(s, g) == fn(s, sorted(g)) == fn(s, g[::-1])


def test_out_of_range_gaps(stack3):
    for bad in ([0.0, 1, 2], [1, 2, 4.0], [-1, 1, 2]):
        with pytest.raises(DomainError):
            ss_efficiency(stack3, bad)
        with pytest.raises(DomainError):
            mj_efficiency(stack3, bad)


def test_ss_dominates_mj_on_random_gaps(table):
    ss, mj = make_stack(3, "ss", table), make_stack(3, "mj", table)
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        g = rng.uniform(0.001, 3.999, n)
        a, b = ss_efficiency(ss, g), mj_efficiency(mj, g)
        assert 0 <= b <= a + 1e-12 < 1


def test_mj_matches_brute_force_current_scan(table):
    mj = make_stack(3, "mj", table)
    g = np.array([0.95, 1.4, 2.0])
    jg = solar._band_currents(mj, g)
    js = np.linspace(0, jg.min(), 4001)[1:-1]
    powers = [j * sum(voltage_for_current(mj.model, e, x - j) for e, x in zip(g, jg)) for j in js]
    assert mj_efficiency(mj, g) == pytest.approx(max(powers) / table.p_in, abs=1e-6)


def test_refinement_with_duplicate_gap(table):
    s3, s4 = make_stack(3, "ss", table), make_stack(4, "ss", table)
    g = [0.93, 1.41, 2.06]
    assert ss_efficiency(s4, g + [2.06]) == pytest.approx(ss_efficiency(s3, g), rel=1e-12)


# ---- starts and objective

def test_informed_starts(table):
    s1 = make_stack(1, "ss", table)
    assert informed_starts(s1)[1].tolist() == [2.0]
    s2 = make_stack(2, "ss", table)
    a, _ = informed_starts(s2)
    assert np.all(np.diff(a) > 0)
    assert flux_integral(table, a[0], a[1]) == pytest.approx(flux_integral(table, a[1]), rel=1e-9)
    for n in range(1, 11):
        a, b = informed_starts(make_stack(n, "mj", table))
        assert np.all(np.diff(a) > 0) and np.all(np.diff(b) > 0)
        assert np.all((b > 0.5) & (b < 3.5))


def test_objective_wrapper(table):
    s = make_stack(3, "ss", table)
    spec = objective_for(s)
    assert spec.d == 3
    assert np.allclose(spec.lower, 1e-3) and np.allclose(spec.upper, 4 - 1e-3)
    g = [1.5, 0.9, 2.2]
    assert spec(g) == pytest.approx(1 - ss_efficiency(s, g))
    assert spec(g) == spec(sorted(g))
    assert 1 - 0.51351 == pytest.approx(0.48649)


def test_energy_sanity(table):
    rng = np.random.default_rng(0)
    for topology in ("ss", "mj"):
        s = make_stack(5, topology, table)
        for _ in range(50):
            eta = solar.efficiency(s, rng.uniform(0.001, 3.999, 5))
            assert 0 <= eta < 1


def test_missing_topology(table):
    with pytest.raises(DomainError):
        make_stack(3, "tandem", table)
