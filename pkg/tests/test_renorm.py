import pytest

from quenchlab.errors import ArgumentError
from quenchlab.percolation import required_radius, sample_box_edges
from quenchlab.renorm import bound_chain, chain_margins, coarse_grain


def test_chain_monotone_micro():
    R = required_radius(1, 1, True)
    for seed in range(3):
        w = sample_box_edges(R, 0.85, seed)
        ch = bound_chain(w, 1, 0.4)
        assert [lab for lab, _ in ch] == ["fine", "thinned", "coarse"]
        for name, d, slack in chain_margins(ch):
            assert d >= -slack, name


def test_all_open_cells_good():
    R = required_radius(1, 1, True)
    cs = coarse_grain(sample_box_edges(R, 1.0), 1, 0.4, 1, True)
    assert cs.r1.bits.all()
    assert all(n >= 1 for n in cs.counts.values())


def test_too_small_box():
    with pytest.raises(ArgumentError):
        coarse_grain(sample_box_edges(3, 0.9, 0), 1, 0.4, 1, True)
