import pytest

from pdit_qkd.protocols import BB84, ProtocolRegistry, SixState


def test_registry_names():
    assert set(ProtocolRegistry.names()) >= {"bb84", "six-state"}
    assert ProtocolRegistry.get("bb84") is BB84
    assert isinstance(ProtocolRegistry.create("six-state"), SixState)


def test_unknown_protocol():
    assert ProtocolRegistry.get("b92") is None
    with pytest.raises(ValueError):
        ProtocolRegistry.create("b92")


class TestBB84:
    def test_independent_flips(self, bb84):
        d = bb84.distribution(0.1)
        assert d.p11 == pytest.approx(0.01)
        assert d.p01 == pytest.approx(0.09)
        assert d.is_independent

    def test_bit_error_rate_is_Q(self, bb84):
        d = bb84.distribution(0.07)
        assert d.p10 + d.p11 == pytest.approx(0.07)

    def test_Q_range(self, bb84):
        with pytest.raises(ValueError):
            bb84.distribution(0.6)
        with pytest.raises(ValueError):
            bb84.distribution(-0.01)


class TestSixState:
    def test_depolarising_rates(self, six_state):
        d = six_state.distribution(0.12)
        assert d.p01 == d.p10 == d.p11 == pytest.approx(0.06)
        assert d.p00 == pytest.approx(0.82)

    def test_feasible_up_to_two_thirds(self, six_state):
        d = six_state.distribution(2 / 3)
        assert d.p00 == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ValueError):
            six_state.distribution(0.7)
