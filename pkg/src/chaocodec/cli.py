"""Command-line front end: encode, decode, keygen, pool, sim, trace.

Input files are treated as bit sequences, MSB-first within each byte.
Exit codes: 0 success, 2 format/model error, 3 key error, 4 capacity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import codec, multicast
from .bits import bytes_to_bits, pack_bits
from .container import Codeword, P_DENOMINATOR
from .errors import CodecError, ConfigError, FormatError, KeyMaterialError, exit_code_for
from .keying import (EncryptionKey, KeyLedger, derive_pool, format_key_file,
                     keygen, parse_key_file, pool_math, restrict_modes)

POOL_ENUMERATE_MAX_M = 16


def _parse_modes(text: str) -> tuple[int, ...]:
    try:
        return restrict_modes(int(d) for d in text.replace(",", " ").split())
    except ValueError:
        raise FormatError(f"could not parse mode subset {text!r}") from None


def _resolve_p(args, bits: str | None = None) -> int:
    if args.p_num is not None:
        return codec.resolve_p_num(p_num=args.p_num)
    if args.p == "auto":
        if not bits:
            raise ConfigError("--p auto needs a non-empty input file")
        zeros = bits.count("0")
        p_num = round(Fraction(zeros * P_DENOMINATOR, len(bits)))
        return min(max(p_num, 1), P_DENOMINATOR - 1)
    if args.p is not None:
        return codec.resolve_p_num(Fraction(args.p))
    raise ConfigError("a model probability is required (--p or --p-num)")


def _load_key(args) -> EncryptionKey:
    if getattr(args, "key", None) is not None:
        return EncryptionKey.from_string(args.key)
    if getattr(args, "key_file", None):
        return parse_key_file(Path(args.key_file).read_text())
    if getattr(args, "seed", None) is not None and getattr(args, "m", None) is not None:
        allowed = _parse_modes(args.modes) if getattr(args, "modes", None) else None
        return keygen(args.seed, args.m, allowed=allowed)
    raise KeyMaterialError("a key is required (--key, --key-file, or --seed with --m)")


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def cmd_encode(args) -> int:
    data = Path(args.infile).read_bytes()
    bits = bytes_to_bits(data)
    p_num = _resolve_p(args, bits)
    key = _load_key(args)
    if args.exact:
        cw = codec.encode_exact(bits, key=key, p_num=p_num)
    else:
        cw = codec.encode_stream(bits, key=key, precision=args.precision, p_num=p_num)
    Path(args.outfile).write_bytes(cw.to_bytes())
    bound = codec.code_length_bound(bits, p_num=p_num)
    valid, total, prob = pool_math(len(key))
    payload = {
        "input_bits": len(bits),
        "payload_bits": cw.header.payload_len_bits,
        "entropy_bound_bits": list(bound),
        "p_num": p_num,
        "m": len(key),
        "pool_valid_keys": str(valid),
        "pool_total_keys": str(total),
        "pool_guess_probability": str(prob),
        "coder": "exact" if args.exact else f"stream/{args.precision}",
        "out": str(args.outfile),
    }
    _emit(args, payload, [
        f"encoded {len(bits)} bits -> {cw.header.payload_len_bits} payload bits "
        f"(bound {bound[0]}..{bound[1]})",
        f"pool: {valid} of {total} keys decode this stream "
        f"(guess probability {prob})",
        f"wrote {args.outfile}",
    ])
    return 0


def cmd_decode(args) -> int:
    cw = Codeword.from_bytes(Path(args.infile).read_bytes())
    key = _load_key(args)
    if args.exact:
        bits = codec.decode_exact(cw, key)
    else:
        bits = codec.decode_stream(cw, key, precision=args.precision)
    Path(args.outfile).write_bytes(pack_bits(bits))
    _emit(args, {"bits": len(bits), "out": str(args.outfile)},
          [f"decoded {len(bits)} bits", f"wrote {args.outfile}"])
    return 0


def cmd_keygen(args) -> int:
    allowed = _parse_modes(args.modes) if args.modes else None
    key = keygen(args.seed, args.m, allowed=allowed)
    text = format_key_file(key)
    if args.out:
        Path(args.out).write_text(text)
    _emit(args, {"key": str(key), "m": len(key), "tail": key.tail_mode},
          [text.strip()])
    return 0


def cmd_pool(args) -> int:
    key = _load_key(args)
    if args.bits is None:
        valid, total, prob = pool_math(len(key))
        _emit(args, {"m": len(key), "valid": str(valid), "total": str(total),
                     "guess_probability": str(prob)},
              [f"M={len(key)}: {valid} valid of {total} total keys "
               f"(guess probability {prob})"])
        return 0
    pool = derive_pool(key, args.bits)
    valid, total, prob = pool_math(pool.m)
    payload = {
        "m": pool.m,
        "pairs": [list(pair) for pair in pool.pairs],
        "valid": str(valid), "total": str(total), "guess_probability": str(prob),
    }
    lines = [f"per-position pairs: {' '.join(str(p) for p in pool.pairs)}",
             f"pool size {valid} of {total} keys"]
    if args.enumerate:
        if pool.m > POOL_ENUMERATE_MAX_M:
            raise ConfigError(
                f"--enumerate limited to M <= {POOL_ENUMERATE_MAX_M}, got {pool.m}")
        members = sorted(str(k) for k in pool.enumerate())
        payload["members"] = members
        lines.append("members: " + " ".join(members))
    _emit(args, payload, lines)
    return 0


def cmd_sim(args) -> int:
    cfg = multicast.SimConfig(
        users=args.users, n=args.n, m=args.m,
        p_num=_resolve_p(args), seed=args.seed,
        precision=args.precision,
        allowed_modes=_parse_modes(args.modes) if args.modes else None,
        collude_k=args.collude_k, scheme=args.scheme,
    )
    report = multicast.simulate_multicast(cfg)
    payload = report.to_dict()
    payload["decode_ok"] = sum(report.decode_ok)
    _emit(args, payload, [
        f"{report.users} users, {sum(report.decode_ok)} decoded OK "
        f"(ciphertext {report.ciphertext_bits} bits, sha256 {report.ciphertext_sha256[:16]}...)",
        f"key payload per user: {report.key_bits_per_user} bits "
        f"(+wrap: {report.wrapped_bits_per_user} bits on the wire)",
        f"rate {report.rate_bits_per_symbol:.4f} bits/symbol, "
        f"bound {report.entropy_bound_bits}",
    ])
    return 0 if report.all_decoded else 1


def cmd_trace(args) -> int:
    ledger = KeyLedger.load(args.ledger)
    leaked = EncryptionKey.from_string(args.key, ledger.pool.tail_mode)
    result = ledger.trace(leaked)
    _emit(args, {"status": result.status, "user": result.user},
          [f"{result.status}" + (f": {result.user}" if result.user else "")])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaocodec",
        description="Joint compression+encryption codec with multicast key tooling")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, model=False, keyed=False, coder=False):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if model:
            p.add_argument("--p", help="P('0') as a decimal, fraction, or 'auto'")
            p.add_argument("--p-num", type=int, dest="p_num",
                           help="P('0') numerator over 65536")
        if keyed:
            p.add_argument("--key", help="key digit string, e.g. 136")
            p.add_argument("--key-file", help="CACKEY v1 key file")
            p.add_argument("--seed", help="derive the key from this seed")
            p.add_argument("--m", type=int, help="keyed prefix length for --seed")
            p.add_argument("--modes", help="restrict key digits to this subset, e.g. 1,5")
        if coder:
            p.add_argument("--exact", action="store_true",
                           help="use the exact coder instead of the streaming one")
            p.add_argument("--precision", type=int, default=codec.DEFAULT_PRECISION,
                           help="streaming coder register width (16..62)")

    p = sub.add_parser("encode", help="compress+encrypt a file")
    p.add_argument("infile")
    p.add_argument("outfile")
    add_common(p, model=True, keyed=True, coder=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decrypt+decompress a stream")
    p.add_argument("infile")
    p.add_argument("outfile")
    add_common(p, keyed=True, coder=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("keygen", help="derive a key from a seed")
    p.add_argument("--seed", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--modes")
    p.add_argument("--out", help="write a CACKEY v1 key file here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("pool", help="pool math / pool enumeration for a key")
    p.add_argument("--bits", help="plaintext prefix matching the key length")
    p.add_argument("--enumerate", action="store_true")
    add_common(p, keyed=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("sim", help="run the multicast simulation")
    p.add_argument("--users", type=int, default=8)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--collude-k", type=int, default=0, dest="collude_k")
    p.add_argument("--scheme", default="NULL-TEST")
    p.add_argument("--modes")
    p.add_argument("--precision", type=int, default=codec.DEFAULT_PRECISION)
    add_common(p, model=True)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("trace", help="attribute a leaked key against a ledger")
    p.add_argument("--ledger", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
