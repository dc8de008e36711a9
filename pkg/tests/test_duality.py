import numpy as np
import pytest

from quenchlab.duality import (build_divS1, duality_check, ghost_graph, haar_sample,
                               lambda_limit, wells_generalized)
from quenchlab.errors import StructureError
from quenchlab.graph import build_lattice_box

# mpmath: sum_k k^2 I_k(1) I_k(3) / sum_k I_k(1) I_k(3)
DUAL_L0_VAR = 0.647641958268412937140986803153


def test_divergence_free_extension():
    sp = build_divS1(ghost_graph(1, 2))
    th = haar_sample(sp, seed=4, size=100)
    assert np.max(np.abs(sp.divergence(th))) < 1e-12
    g = sp.graph
    assert sp.m == g.num_edges - g.num_vertices + 1
    with pytest.raises(StructureError):
        build_divS1(build_lattice_box(2, 1))


def test_duality_single_site_oracle():
    rep = duality_check(0, 1, 1.0, 1.0, 3.0)
    assert abs(rep.height - DUAL_L0_VAR) <= 1e-9
    assert rep.diff <= 1e-5
    assert rep.z_rel_err <= 1e-8


@pytest.mark.parametrize("n", [1, 2])
def test_duality_with_closed_site(n):
    rep = duality_check(0, n, 1.0, 1.0, 2.0, r={0: 0})
    assert rep.diff <= 1e-5 and rep.forms_diff <= 1e-5


def test_wells_generalized_dominates():
    clean, avg, table = wells_generalized(0, 2, 1.0, 1.0, 2.0)
    assert clean <= avg + 1e-8
    assert abs(table.probs.sum() - 1) < 1e-12


def test_lambda_limit_decreases():
    errs = lambda_limit(0, 1, 1.0, 1.0, lams=(2.0, 8.0, 32.0))
    assert errs[0] > errs[1] > errs[2] >= 0
