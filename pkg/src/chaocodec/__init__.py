"""chaocodec: joint compression and encryption with chaotic-map arithmetic coding.

One encode yields a bitstream that exponentially many distinct keys can
decode, which makes a single ciphertext multicastable to many users, each
holding their own traceable key.
"""

from .codec import (DEFAULT_PRECISION, code_length_bound, decode_exact,
                    decode_stream, encode_exact, encode_stream, quantized_p,
                    resolve_p_num)
from .container import Codeword, P_DENOMINATOR, StreamHeader
from .errors import (CapacityError, CodecError, ConfigError, DecodeError,
                     FormatError, KeyMaterialError, ModelError, WrapError)
from .keying import (EncryptionKey, KeyLedger, KeyPool, TraceResult, WrappedKey,
                     derive_pool, format_key_file, is_pool_member, keygen,
                     parse_key_file, pool_math, restrict_modes, sample_user_key,
                     unwrap_key, wrap_key)
from .maps import (MODES, LinearPiece, MapArrangement, ModeParams, SymbolModel,
                   build_pieces, key_bits, keyspace_size, map_forward,
                   mode_params, twin_mode)
from .multicast import (SimConfig, SimReport, TraceExperimentReport,
                        brute_force_outcomes, brute_force_valid_keys, collude,
                        run_trace_experiment, simulate_multicast)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "CodecError", "Codeword", "ConfigError", "DecodeError",
    "DEFAULT_PRECISION", "EncryptionKey", "FormatError", "KeyLedger",
    "KeyMaterialError", "KeyPool", "LinearPiece", "MapArrangement", "MODES",
    "ModeParams", "ModelError", "P_DENOMINATOR", "SimConfig", "SimReport",
    "StreamHeader", "SymbolModel", "TraceExperimentReport", "TraceResult",
    "WrapError", "WrappedKey", "brute_force_outcomes", "brute_force_valid_keys",
    "build_pieces", "code_length_bound", "collude", "decode_exact",
    "decode_stream", "derive_pool", "encode_exact", "encode_stream",
    "format_key_file", "is_pool_member", "key_bits", "keygen", "keyspace_size",
    "map_forward", "mode_params", "parse_key_file", "pool_math", "quantized_p",
    "resolve_p_num", "restrict_modes", "run_trace_experiment", "sample_user_key",
    "simulate_multicast", "twin_mode", "unwrap_key", "wrap_key",
]
