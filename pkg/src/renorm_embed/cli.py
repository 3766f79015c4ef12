"""Command-line entry point: ``renorm-embed <subcommand> ...``.

Exit status: 0 for yes/success, 1 for a definite no, 2 for an error or an
undecided answer.  Every subcommand takes ``--format text|json`` and
``--out PATH``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .blocks import Block, LevelSampler, SymbolSampler
from .classify import Status
from .construct import CatalogCaps, LevelCatalog, classify_block, deterministic_sequence, list_level_catalog
from .core import get_profile, load_config, parameters_from_config, rng_stream, validate_parameters
from .deciders import compatible_decide, lipschitz_embed_greedy, rough_iso_search
from .encodings import (compatible_spec, decode_roughiso, gap_encode, lipschitz_spec, roughiso_constants,
                        roughiso_oracles, roughiso_spec, spec_from_config)
from .errors import EmbedError, ParseError
from .experiments import (compatibility_q_curve, good_fraction, length_moment, minimal_M_curve, tail_curve)
from .rembed import EmbedOracles, rembed_decide
from .store import ENV_VAR, Store, cache_key

YES, NO, ERROR = 0, 1, 2


# ---------------------------------------------------------------------------
# input parsing

def read_source(value: str) -> tuple:
    """Return ``(text, source_name)``; an existing file path is read, anything else is inline."""
    if value.startswith("@"):
        value = value[1:]
        with open(value, encoding="utf-8") as fh:
            return fh.read(), value
    if os.path.isfile(value):
        with open(value, encoding="utf-8") as fh:
            return fh.read(), value
    return value, "<inline>"


def parse_sequence(text: str, source: str = "<inline>", bits: bool = False) -> list:
    """Whitespace-separated non-negative integers; bit inputs may also be packed ``0101`` strings."""
    out = []
    for lineno, line in enumerate(text.splitlines() or [""], 1):
        col = 0
        for tok in line.split():
            col = line.index(tok, col)
            if bits and len(tok) > 1 and set(tok) <= {"0", "1"}:
                out.extend(int(c) for c in tok)
            elif tok.isdigit():
                v = int(tok)
                if bits and v > 1:
                    raise ParseError(f"expected a bit, got {tok!r}", lineno, col + 1, source)
                out.append(v)
            else:
                raise ParseError(f"expected a non-negative integer, got {tok!r}", lineno, col + 1, source)
            col += len(tok)
    return out


def load_sequence(value: str, bits: bool = False) -> list:
    text, src = read_source(value)
    return parse_sequence(text, src, bits)


def int_list(value: str) -> list:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def frac_list(value: str) -> list:
    try:
        return [Fraction(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


# ---------------------------------------------------------------------------
# shared configuration

def _params_and_spec(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    if args.profile:
        ps = get_profile(args.profile)
    elif "parameters" in cfg or "profile" in cfg:
        ps = parameters_from_config(cfg)
    else:
        ps = get_profile("micro-tiny")
    if not hasattr(args, "problem"):
        return ps, None
    if args.problem is None and "problem" in cfg:
        return ps, spec_from_config(cfg)
    kind = args.problem or "compatible"
    if kind == "compatible":
        return ps, compatible_spec(args.q)
    if kind == "lipschitz":
        return ps, lipschitz_spec(args.M0, ps.R)
    return ps, roughiso_spec(args.M0, args.K if args.K is not None else args.M0 + 4)


def _store(args):
    root = args.store or os.environ.get(ENV_VAR)
    return Store(root) if root else None


def _caps(args) -> CatalogCaps:
    caps = CatalogCaps()
    if getattr(args, "epsilon", None) is not None:
        caps = CatalogCaps(**{**caps.as_dict(), "epsilon": args.epsilon})
    return caps


def _catalogs(ps, spec, level, caps, store):
    cats = []
    for j in range(level + 1):
        key = cache_key("catalog", ps, spec, caps, schema="catalog-v1", level=j)
        data = store.get(key) if store is not None else None
        if data is not None:
            cat = LevelCatalog.from_json(data.decode("utf-8"))
        else:
            cat = list_level_catalog(j, ps, spec, caps, prev=cats[-1] if cats else None)
            if store is not None:
                store.put(key, cat.to_json().encode("utf-8"), label=f"catalog level={j} profile={ps.name}")
        cats.append(cat)
    return cats


# ---------------------------------------------------------------------------
# subcommands; each returns (status, text, json-object)

def cmd_embed(args):
    X, Y = load_sequence(args.x, bits=True), load_sequence(args.y, bits=True)
    first = args.first_max if args.first_max is not None else args.M
    phi = lipschitz_embed_greedy(X, Y, args.M, first)
    if phi is None:
        return NO, "no embedding", {"embeds": False}
    return YES, "phi=[" + ",".join(map(str, phi.phi)) + "]", {"embeds": True, "phi": list(phi.phi)}


def cmd_compatible(args):
    X, Y = load_sequence(args.x, bits=True), load_sequence(args.y, bits=True)
    ds = compatible_decide(X, Y)
    if ds is None:
        return NO, "incompatible", {"compatible": False}
    text = "compatible\nD: " + " ".join(map(str, ds.D)) + "\nD': " + " ".join(map(str, ds.Dp))
    return YES, text, {"compatible": True, "D": list(ds.D), "Dp": list(ds.Dp)}


def cmd_roughiso(args):
    A, B = load_sequence(args.a), load_sequence(args.b)
    if args.search:
        M, D, C = (Fraction(v) for v in (args.M, args.D, args.C))
        T = rough_iso_search(A, B, M, D, C, monotone_only=not args.general)
    else:
        w = rembed_decide(gap_encode(A), gap_encode(B), roughiso_oracles(args.M0, args.R))
        T = None if w is None else decode_roughiso(A, B, w, args.M0, args.R)
    if T is None:
        return NO, "no map", {"found": False}
    pairs = [[x, y] for x, y in T.assignment]
    text = "constants M=%s D=%s C=%s\n" % (T.M, T.D, T.C) + "\n".join(f"{x} -> {y}" for x, y in pairs)
    return YES, text, {"found": True, "M": str(T.M), "D": str(T.D), "C": str(T.C), "assignment": pairs}


def cmd_rembed(args):
    ps, spec = _params_and_spec(args)
    X = load_sequence(args.x)
    Y = load_sequence(args.y)
    R = args.R if args.R is not None else ps.R
    if args.problem == "roughiso" and spec is not None:
        oracles = roughiso_oracles(args.M0, R)
    else:
        oracles = EmbedOracles.from_spec(spec, R)
    w = rembed_decide(X, Y, oracles)
    if w is None:
        return NO, "no R-embedding", {"embeds": False}
    return YES, w.to_text().rstrip("\n"), {"embeds": True, "i": list(w.i_seq), "ip": list(w.ip_seq)}


def _block_obj(b: Block) -> dict:
    return {"level": b.level, "chars": list(b.chars), "W": b.W, "T": b.T}


def cmd_sample(args):
    ps, spec = _params_and_spec(args)
    base = SymbolSampler(spec, args.side)
    if args.level == 0:
        sampler = base
    else:
        cats = _catalogs(ps, spec, args.level - 1, _caps(args), _store(args)) if args.level >= 2 else []
        from .classify import LevelContext
        oracles = [base.is_good] + [(lambda c: (lambda b: LevelContext(ps, c.level, spec, c).is_good(b, args.side)))(c)
                                    for c in cats[:args.level - 1]]
        sampler = LevelSampler(base, ps, args.level, oracles)
    blocks = [sampler(rng_stream(args.seed, (0, t))) for t in range(args.count)]
    text = "\n".join(" ".join(map(str, b.chars)) + f"  # len={len(b.chars)} W={b.W} T={b.T}" for b in blocks)
    return YES, text, {"seed": args.seed, "blocks": [_block_obj(b) for b in blocks]}


def cmd_classify(args):
    ps, spec = _params_and_spec(args)
    chars = load_sequence(args.block)
    if args.level == 0 and len(chars) != 1:
        raise ParseError("a level-0 block is a single symbol", 1, 1)
    if args.level >= 2:
        raise EmbedError("classify supports levels 0 and 1 (sub-block structure is not carried by a flat input)")
    blk = Block(args.level, bytes(chars))
    cats = _catalogs(ps, spec, max(args.level - 1, 0), _caps(args), _store(args))
    st = classify_block(blk, ps, spec, side=args.side, caps=_caps(args), catalogs=cats)
    code = {Status.GOOD: YES, Status.UNKNOWN: ERROR}.get(st, NO)
    return code, st.name.lower(), {"status": st.name.lower(), "level": args.level, "side": args.side}


def cmd_catalog(args):
    ps, spec = _params_and_spec(args)
    cat = _catalogs(ps, spec, args.level, _caps(args), _store(args))[-1]
    obj = json.loads(cat.to_json())
    text = (f"level {cat.level}: good X={len(cat.good_x)} Y={len(cat.good_y)} "
            f"semibad X={len(cat.semibad_x)} Y={len(cat.semibad_y)} "
            f"good_complete={cat.good_complete} semibad_complete={cat.semibad_complete}")
    return YES, text, obj


def cmd_construct(args):
    ps, spec = _params_and_spec(args)
    seq = deterministic_sequence(args.J, ps, spec, _caps(args), side=args.side)
    return YES, " ".join(map(str, seq)), {"J": args.J, "side": args.side, "sequence": list(seq)}


def cmd_experiment(args):
    name = args.name
    if name == "minimal-M":
        res = minimal_M_curve(args.n or [10, 20, 40], args.M or [1, 2, 3], args.trials, args.seed)
    elif name == "compatibility":
        qs = args.q_grid or [Fraction(k, 10) for k in range(6)]
        res = compatibility_q_curve(qs, (args.n or [50])[0], args.trials, args.seed)
    else:
        ps, spec = _params_and_spec(args)
        if name == "tail":
            res = tail_curve(args.level, ps, spec, args.trials, args.p_grid or [Fraction(k, 10) for k in range(1, 10)],
                             args.seed, inner_trials=args.inner_trials, side=args.side)
        elif name == "length":
            res = length_moment(args.level, ps, spec, args.trials, args.seed, side=args.side)
        else:
            res = good_fraction(args.level, ps, spec, args.trials, args.seed, side=args.side)
    obj = {"descriptor": res.descriptor(), "rows": [list(r) for r in res.rows]}
    return YES, res.to_csv().rstrip("\n"), obj, res


def cmd_validate(args):
    ps, _ = _params_and_spec(args)
    rep = validate_parameters(ps)
    lines = [f"profile {ps.name}: " + ("conforming" if rep.conforming else "not conforming")]
    lines += [f"  [{'ok' if ok else 'FAIL'}] {label}" for label, ok in rep.checks]
    obj = {"profile": ps.name, "params": ps.as_dict(), "conforming": rep.conforming,
           "checks": [{"constraint": label, "ok": ok} for label, ok in rep.checks]}
    return (YES if rep.conforming else NO), "\n".join(lines), obj


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="write the result here instead of standard output")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--profile", help="named parameter profile (default micro-tiny)")
    model.add_argument("--config", help="TOML file with [parameters] and/or [problem] tables")
    model.add_argument("--problem", choices=("compatible", "lipschitz", "roughiso"))
    model.add_argument("--q", type=Fraction, default=Fraction(1, 2 ** 24), help="compatible-spec density")
    model.add_argument("--M0", type=int, default=2)
    model.add_argument("--K", type=int)
    model.add_argument("--side", choices=("X", "Y"), default="X")
    model.add_argument("--store", help=f"artifact store directory (default ${ENV_VAR})")
    model.add_argument("--epsilon", type=Fraction, help="catalog truncation mass")

    p = argparse.ArgumentParser(prog="renorm-embed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("embed", parents=[common], help="Lipschitz embedding of bit prefixes (greedy)")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--first-max", type=int)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("compatible", parents=[common], help="compatibility of two bit sequences")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.set_defaults(func=cmd_compatible)

    s = sub.add_parser("roughiso", parents=[common], help="rough isometry between point sets")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--M0", type=int, default=2)
    s.add_argument("--R", type=int, default=1)
    s.add_argument("--search", action="store_true", help="direct search with --M --D --C")
    s.add_argument("--general", action="store_true", help="with --search, allow non-monotone maps")
    s.add_argument("--M", default="2")
    s.add_argument("--D", default="1")
    s.add_argument("--C", default="1")
    s.set_defaults(func=cmd_roughiso)

    s = sub.add_parser("rembed", parents=[common, model], help="decide X -> Y and print a witness")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--R", type=int)
    s.set_defaults(func=cmd_rembed)

    s = sub.add_parser("sample", parents=[common, model], help="sample level-j blocks")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("classify", parents=[common, model], help="good / semibad / bad status of a block")
    s.add_argument("--level", type=int, default=0)
    s.add_argument("--block", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("catalog", parents=[common, model], help="good and semi-bad catalog of a level")
    s.add_argument("--level", type=int, default=0)
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("construct", parents=[common, model], help="explicit sequence good up to level J")
    s.add_argument("--J", type=int, default=1)
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("experiment", parents=[common, model], help="Monte Carlo curves (CSV)")
    s.add_argument("name", choices=("tail", "length", "good-fraction", "minimal-M", "compatibility"))
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--n", type=int_list)
    s.add_argument("--M", type=int_list)
    s.add_argument("--q-grid", type=frac_list)
    s.add_argument("--p-grid", type=frac_list)
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--inner-trials", type=int, default=200)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("validate-params", parents=[common, model], help="check the parameter constraints")
    s.set_defaults(func=cmd_validate)
    return p


def _emit(args, text, obj, result=None):
    if result is not None and args.out:
        result.write(args.out)
        if args.format == "json":
            print(json.dumps(obj, sort_keys=True, default=str))
        return
    payload = json.dumps(obj, sort_keys=True, default=str) if args.format == "json" else text
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
        code, text, obj = out[:3]
        _emit(args, text, obj, out[3] if len(out) > 3 else None)
        return code
    except (EmbedError, OSError, ValueError) as exc:
        print(f"renorm-embed {args.command}: error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
