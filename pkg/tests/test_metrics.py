import pytest

from nlchirp.errors import ContractError, DomainError
from nlchirp.metrics import compute_pdr, compute_ser, compute_throughput


def test_ser():
    assert compute_ser([1, 2, 3], [1, 2, 3]) == 0.0
    assert compute_ser([1, 2, 3], [0, 0, 0]) == 1.0
    assert compute_ser(list(range(100)), [0] + list(range(1, 99)) + [0]) == 0.01
    with pytest.raises(ContractError):
        compute_ser([1, 2], [1])


def test_pdr():
    assert compute_pdr([0.0, 0.0]) == 1.0
    assert compute_pdr([0.19, 0.21]) == 0.5
    assert compute_pdr([0.2]) == 1.0
    assert compute_pdr([1.0, 0.0]) == 0.5
    with pytest.raises(ContractError):
        compute_pdr([])


def test_throughput():
    assert compute_throughput(1024, 1.0) == 1024
    assert compute_throughput(0, 3.0) == 0
    assert compute_throughput(200, 2.0) == 100
    with pytest.raises(DomainError):
        compute_throughput(5, 0.0)
