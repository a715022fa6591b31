"""Inside the projector: stems, bidirectional set attention, output tokens,
auxiliary heads, and a finite-difference spot check of the gradients.

Run: python demos/03_projector.py
"""

import numpy as np

from hgtok import (
    HipConfig,
    StubProvider,
    TemplateSpec,
    build_template,
    encapsulate,
    forward,
    init_params,
    serialize,
)
from hgtok.diagnostic import core_pair
from hgtok.projector import aux_ord_logits, aux_rel_logits, backward

h_a, _ = core_pair()
template = build_template(TemplateSpec(layer_budgets=(3, 2), pe_dim=4))
seq = serialize(h_a, center=1, template=template, seed=0)
tokens = encapsulate(seq, StubProvider(dim=12, seed=0))

config = HipConfig(d_text=12, d_struct=template.spec.struct_dim, d_llm=32,
                   d_core=16, d_sidecar=8)
params = init_params(config, seed=0)
t, cache = forward(tokens, params)
print(f"hypergraph tokens: {t.shape} (slots x LM width), finite: {np.isfinite(t).all()}")

print("\nattention sites (slot <- neighbors, weights):")
for site in cache.e_sites + cache.v_sites:
    weights = ", ".join(f"{a:.2f}" for a in site.alpha)
    print(f"  slot {site.slot:2d} <- {site.neighbors}  alpha=[{weights}]  sum={site.alpha.sum():.9f}")

carried = [s.index for s in seq.slots if s.index not in cache.updated_e | cache.updated_v]
print("\ncarried-over slots (overview/pads):", carried)

ord_logits, slots, targets = aux_ord_logits(cache, params)
print(f"\norder-bucket head: {len(slots)} eligible slots, targets {targets}")
pairs = [(0, 1), (1, 2)]
print("relation head logits for", pairs)
print(aux_rel_logits(pairs, cache, params).round(3))

# gradient spot check against central finite differences
rng = np.random.default_rng(1)
r = rng.standard_normal(t.shape)
grads = backward(cache, params, r)
flat_p, flat_g = params.flatten(), grads.flatten()
idx = rng.choice(flat_p.size, 5, replace=False)
print("\nfinite-difference spot check (analytic vs central FD):")
probe = params.copy()
for k in idx:
    eps = 1e-5
    vec = flat_p.copy()
    vec[k] += eps
    probe.load_flat(vec)
    up = float((forward(tokens, probe)[0] * r).sum())
    vec[k] -= 2 * eps
    probe.load_flat(vec)
    down = float((forward(tokens, probe)[0] * r).sum())
    fd = (up - down) / (2 * eps)
    print(f"  param {k:6d}: analytic {flat_g[k]: .8f}  fd {fd: .8f}")
