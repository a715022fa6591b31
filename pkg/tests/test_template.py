import numpy as np
import pytest

from hgtok.core import BucketScheme
from hgtok.errors import DataError, TemplateSizeError
from hgtok.template import CenterRole, TemplateSpec, build_template


def test_slot_count_closed_form_small():
    spec = TemplateSpec(center_role=CenterRole.VERTEX, layer_budgets=(3, 2))
    assert spec.num_detail_slots == 1 + 3 + 6
    assert spec.num_slots == 10 + 2 * 4


def test_slot_count_default_budget():
    spec = TemplateSpec(layer_budgets=(8, 8))
    assert spec.num_detail_slots == 73
    assert spec.num_slots == 81
    assert spec.num_slots <= 160


def test_pe_columns_orthonormal():
    template = build_template(TemplateSpec(layer_budgets=(3, 2)))
    u = template.pe_detail
    gram = u.T @ u
    assert np.allclose(gram, np.eye(u.shape[1]), atol=1e-9)


def test_pe_sign_fix_deterministic():
    t1 = build_template(TemplateSpec(layer_budgets=(4, 3)))
    t2 = build_template(TemplateSpec(layer_budgets=(4, 3)))
    assert np.array_equal(t1.pe_all, t2.pe_all)
    for j in range(t1.pe_detail.shape[1]):
        col = t1.pe_detail[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-12)[0]
        assert col[lead] > 0


def test_overview_rows_reserved_per_hop():
    template = build_template(TemplateSpec(layer_budgets=(3, 2), overview_hops=2))
    n_detail = template.num_detail_slots
    hop1 = template.pe_all[n_detail]
    hop2 = template.pe_all[n_detail + 4]
    assert not np.array_equal(hop1, hop2)
    for offset, (hop, _) in enumerate(template.overview_cells):
        row = template.pe_all[n_detail + offset]
        assert row[(hop - 1) % template.spec.pe_dim] == 1.0


def test_budget_violation_raises():
    with pytest.raises(TemplateSizeError):
        build_template(TemplateSpec(layer_budgets=(8, 8), max_tokens=50))


def test_pe_dim_too_large_raises():
    with pytest.raises(DataError):
        build_template(TemplateSpec(layer_budgets=(2, 2), pe_dim=8, max_tokens=160))


def test_parent_links_level_order():
    template = build_template(TemplateSpec(layer_budgets=(2, 3)))
    assert template.parent[0] is None
    assert template.layer[0] == 0
    assert [template.parent[i] for i in (1, 2)] == [0, 0]
    # layer-2 children are grouped parent-major
    assert [template.parent[i] for i in range(3, 6)] == [1, 1, 1]
    assert [template.parent[i] for i in range(6, 9)] == [2, 2, 2]
    assert all(template.layer[i] == 2 for i in range(3, 9))


def test_alternating_roles():
    spec_v = TemplateSpec(center_role=CenterRole.VERTEX)
    assert spec_v.expected_kind(0) is CenterRole.VERTEX
    assert spec_v.expected_kind(1) is CenterRole.HYPEREDGE
    assert spec_v.expected_kind(2) is CenterRole.VERTEX
    spec_e = TemplateSpec(center_role=CenterRole.HYPEREDGE)
    assert spec_e.expected_kind(0) is CenterRole.HYPEREDGE
    assert spec_e.expected_kind(1) is CenterRole.VERTEX


def test_struct_dim_formula():
    scheme = BucketScheme()
    spec = TemplateSpec(layer_budgets=(3, 2), pe_dim=8, bucket_scheme=scheme)
    expected = 8 + 6 + (2 + 1) + (scheme.num_order_buckets + 1) + (scheme.num_degree_buckets + 1)
    assert spec.struct_dim == expected
