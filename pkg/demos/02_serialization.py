"""From a query center to the fixed-shape token sequence.

Shows the template topology, the sampled incidence tree, the overview
shells, and the encapsulated semantic/structural vectors.

Run: python demos/02_serialization.py
"""

import numpy as np

from hgtok import StubProvider, TemplateSpec, build_template, encapsulate, serialize
from hgtok.diagnostic import core_pair
from hgtok.protocol import render_details
from hgtok.serialize import bucket_offsets, overview_aggregate

h_a, _ = core_pair()
spec = TemplateSpec(layer_budgets=(2, 2), overview_hops=2, pe_dim=4)
template = build_template(spec)

print(f"template: {template.num_detail_slots} detail slots "
      f"+ {len(template.overview_cells)} overview cells = {template.num_slots} tokens")
print("positional-encoding block is orthonormal:",
      np.allclose(template.pe_detail.T @ template.pe_detail, np.eye(spec.pe_dim), atol=1e-9))

seq = serialize(h_a, center=1, template=template, seed=7)
print("\nslot table (center = vertex 1):")
for slot in seq.slots:
    print(f"  [{slot.index:2d}] layer={slot.layer} role={slot.role.name:9s} "
          f"parent={slot.parent_index} binding={slot.binding}")

print("\nincidence pattern (hyperedge slot -> member vertex slots):")
for e_slot, members in sorted(seq.members.items()):
    print(f"  slot {e_slot}: {members}")

print("\noverview shells (hop, bucket) -> hyperedge ids:")
for key, eids in sorted(seq.cell_edges.items()):
    if eids:
        print(f"  {key}: {eids}")

provider = StubProvider(dim=16, seed=0)
offsets = bucket_offsets(spec.bucket_scheme, provider.dim, seed=0)
values, nonempty = overview_aggregate(seq, provider, offsets)
print("\noverview cell vector norms:",
      {k: round(float(np.linalg.norm(v)), 3) for k, v in values.items() if nonempty[k]})

tokens = encapsulate(seq, provider)
print(f"\nencapsulated tokens: a {tokens.a.shape}, s {tokens.s.shape}, "
      f"g {tokens.g.shape} (pads have zero semantic rows)")

print("\ndeterministic textual rendering of the same structure:")
print(render_details(seq))
