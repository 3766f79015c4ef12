"""Walk through the three applications on small hand-made inputs.

Run with ``python3 demos/deciders_tour.py``.
"""

from renorm_embed.deciders import compatible_decide, lipschitz_embed_greedy, rough_iso_verify
from renorm_embed.encodings import (compatible_oracles, decode_compatible, decode_roughiso, gap_encode,
                                    roughiso_oracles)
from renorm_embed.rembed import rembed_decide


def lipschitz():
    X, Y = [1, 0], [1, 1, 1, 0]
    phi = lipschitz_embed_greedy(X, Y, M=2)
    print("Lipschitz  X=10 into Y=1110 with gaps <= 2:", phi.phi if phi else None)


def compatible():
    X, Y = [0, 1, 0, 1], [1, 0, 0, 1, 0]
    ds = compatible_decide(X, Y)
    print("compatible", X, Y, "->", "deletions D=%s D'=%s" % (ds.D, ds.Dp) if ds else "incompatible")
    w = rembed_decide(X, Y, compatible_oracles(1))
    if w is not None:
        ds = decode_compatible(X, Y, w)
        print("  decoded from the R-embedding witness: D=%s D'=%s" % (ds.D, ds.Dp))


def rough_isometry():
    A, B = [0, 2, 3, 7, 8], [0, 1, 3, 6, 8]
    w = rembed_decide(gap_encode(A), gap_encode(B), roughiso_oracles(2, 1))
    if w is None:
        print("rough isometry: gap encodings do not embed")
        return
    T = decode_roughiso(A, B, w, 2, 1)
    print("rough isometry", T.as_dict(), "constants", (T.M, T.D, T.C), "verified:", rough_iso_verify(A, B, T))


if __name__ == "__main__":
    lipschitz()
    compatible()
    rough_isometry()
