import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecgfuse.embedding import TimeSeries
from ecgfuse.errors import DataError, LeadOrderMismatch, MissingLead
from ecgfuse.vcgprep import (
    EIGHT_LEADS,
    INVERSE_DOWER,
    TWELVE_LEADS,
    DowerMatrix,
    MultiLeadRecord,
    detect_constant_leads,
    inverse_dower,
    load_dower_matrix,
    select_eight_leads,
)

# Inverse Dower coefficients, rows Vx, Vy, Vz over V1..V6, I, II
PRINTED = [
    [-0.172, -0.074, 0.122, 0.231, 0.239, 0.194, 0.156, -0.010],
    [0.057, -0.019, -0.106, -0.022, 0.041, 0.048, -0.227, 0.887],
    [-0.229, -0.310, -0.246, -0.063, 0.055, 0.108, 0.022, 0.102],
]


def record(names, data, fs=500.0):
    return MultiLeadRecord.from_array(np.asarray(data, dtype=float), names, fs, "r")


def random8(rng, n=16):
    return record(EIGHT_LEADS, rng.standard_normal((n, 8)))


class TestRecord:
    def test_rejects_ragged_and_duplicates(self):
        with pytest.raises(DataError):
            MultiLeadRecord([TimeSeries([1, 2, 3], label="a"), TimeSeries([1, 2], label="b")])
        with pytest.raises(DataError):
            MultiLeadRecord([TimeSeries([1, 2], label="a"), TimeSeries([1, 2], label="a")])
        with pytest.raises(DataError):
            MultiLeadRecord([TimeSeries([1, 2], 100.0, "a"), TimeSeries([1, 2], 200.0, "b")])

    def test_missing_lead_is_key_error(self):
        r = record(["I"], [[1.0], [2.0]])
        with pytest.raises(KeyError):
            r["II"]


class TestConstantLeads:
    def test_zero_lead_flagged(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((100, 3))
        data[:, 1] = 0.0
        assert detect_constant_leads(record(["a", "b", "c"], data)) == ["b"]

    def test_sine_not_flagged(self):
        x = np.sin(np.linspace(0, 20, 500))
        assert detect_constant_leads(record(["a"], x[:, None]), 1e-6) == []

    def test_single_spike_not_flagged(self):
        x = np.zeros(100)
        x[40] = 1e-3
        assert detect_constant_leads(record(["a"], x[:, None]), 1e-6) == []

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_threshold_monotone(self, e1, e2):
        lo, hi = sorted((e1, e2))
        rng = np.random.default_rng(3)
        data = rng.standard_normal((50, 4)) * [1e-3, 0.1, 0.5, 2.0]
        r = record(list("abcd"), data)
        assert set(detect_constant_leads(r, lo)) <= set(detect_constant_leads(r, hi))

    def test_negative_epsilon(self):
        with pytest.raises(ValueError):
            detect_constant_leads(record(["a"], [[0.0], [1.0]]), -1)


class TestSelect:
    def test_drops_redundant_limb_leads(self):
        rng = np.random.default_rng(1)
        r12 = record(TWELVE_LEADS, rng.standard_normal((10, 12)))
        r8 = select_eight_leads(r12)
        assert r8.names == list(EIGHT_LEADS)
        np.testing.assert_array_equal(r8["V3"].samples, r12["V3"].samples)

    def test_identity_on_eight(self):
        r8 = random8(np.random.default_rng(2))
        np.testing.assert_array_equal(select_eight_leads(r8).to_array(), r8.to_array())

    def test_missing_v3(self):
        names = [n for n in TWELVE_LEADS if n != "V3"]
        with pytest.raises(MissingLead) as err:
            select_eight_leads(record(names, np.zeros((4, 11))))
        assert err.value.lead == "V3"


class TestInverseDower:
    def test_matrix_verbatim(self):
        np.testing.assert_array_equal(INVERSE_DOWER.rows, PRINTED)
        assert INVERSE_DOWER.lead_order == EIGHT_LEADS

    def test_zero_in_zero_out(self):
        vcg = inverse_dower(record(EIGHT_LEADS, np.zeros((5, 8))))
        assert vcg.names == ["Vx", "Vy", "Vz"]
        assert not vcg.to_array().any()

    def test_first_column(self):
        data = np.zeros((3, 8))
        data[1, 0] = 1.0
        vcg = inverse_dower(record(EIGHT_LEADS, data)).to_array()
        assert list(vcg[1]) == [-0.172, 0.057, -0.229]

    def test_every_column(self):
        vcg = inverse_dower(record(EIGHT_LEADS, np.eye(8))).to_array()
        np.testing.assert_array_equal(vcg, np.array(PRINTED).T)

    def test_triple_loop_oracle(self):
        rng = np.random.default_rng(4)
        r8 = random8(rng)
        data = r8.to_array()
        want = np.zeros((16, 3))
        for t in range(16):
            for i in range(3):
                for j in range(8):
                    want[t, i] += PRINTED[i][j] * data[t, j]
        np.testing.assert_allclose(inverse_dower(r8).to_array(), want, rtol=0, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        r1, r2 = random8(rng), random8(rng)
        a, b = 1.7, -0.3
        mix = record(EIGHT_LEADS, a * r1.to_array() + b * r2.to_array())
        lhs = inverse_dower(mix).to_array()
        rhs = a * inverse_dower(r1).to_array() + b * inverse_dower(r2).to_array()
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_length_and_rate(self):
        r8 = record(EIGHT_LEADS, np.ones((33, 8)), fs=250.0)
        vcg = inverse_dower(r8)
        assert len(vcg) == 33 and vcg.sample_rate_hz == 250.0

    def test_order_mismatch(self):
        names = list(EIGHT_LEADS)
        names[0], names[1] = names[1], names[0]
        with pytest.raises(LeadOrderMismatch):
            inverse_dower(record(names, np.zeros((3, 8))))

    def test_custom_matrix_file(self, tmp_path):
        order = ["I", "II", "V1", "V2", "V3", "V4", "V5", "V6"]
        rows = np.arange(24.0).reshape(3, 8).tolist()
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"rows": rows, "lead_order": order}))
        m = load_dower_matrix(path)
        r = record(order, np.eye(8))
        np.testing.assert_array_equal(inverse_dower(r, m).to_array(), np.array(rows).T)

    def test_bad_matrix(self):
        with pytest.raises(DataError):
            DowerMatrix(np.zeros((3, 7)))
        with pytest.raises(DataError):
            DowerMatrix(np.zeros((3, 8)), ("V1",) * 8)
