"""Build class G and H2 mappings at level 1 of the micro-maps profile and print a summary."""

from renorm_embed.core import get_profile, scales
from renorm_embed.partmaps import build_G_family, build_H2, check_class_G, h2_step

ps = get_profile("micro-maps")
sc = scales(ps, 1)
n, n_prime = 24 * sc.L3, 26 * sc.L3
B, Bp = [30_000], [70_000]

family = build_G_family(n, n_prime, B, Bp, 1, ps, count=5)
for h, gm in enumerate(family, 1):
    print(f"G member {h}: {gm.z} intervals, tau({B[0]}) = {gm.tau(B[0])}, "
          f"class G: {check_class_G(gm, B, Bp, 1, ps)}")

gm = build_H2(n, n_prime, B, 1, ps)
s = h2_step(n, n_prime, B, 1, ps)[3]
print(f"H2: step s = {s} in [{sc.R_minus}, {sc.R_plus - 1}], {gm.z} intervals, tags {sorted(gm.tags)}")
