"""Distribution-preserving linguistic steganography with prefix-ambiguity
pooling and key-synchronized sampling."""

from .ambiguity import AmbiguityPool, GroupedDistribution, group_ambiguity, normalize_within, pool_of
from .codec import (
    EncodeStepResult,
    bits_to_bytes,
    bytes_to_bits,
    capacity_bits,
    decode_step,
    encode_step,
)
from .distribution import (
    CandidatePool,
    RawPrediction,
    TruncationConfig,
    apply_temperature,
    normalize,
    truncate,
)
from .errors import (
    CapacityExhaustedError,
    DesynchronizationError,
    ParameterError,
    ProviderError,
    VocabularyFormatError,
    VocabularyValidationError,
)
from .metrics import (
    EvalReport,
    ambiguity_frequency,
    avg_perplexity,
    entropy_bits,
    kl_divergence,
    step_klds,
    total_error,
    utilization,
)
from .pipeline import (
    BASELINE,
    SYNCPOOL,
    BaselineReport,
    EmbedOutput,
    ExtractOutput,
    StegoSession,
    StepRecord,
    embed,
    extract,
    run_baseline_roundtrip,
)
from .provider import (
    ExternalProvider,
    SyntheticModelSpec,
    SyntheticProvider,
    connect_external,
    make_synthetic,
)
from .rng import Key, RandomStream, derive_stream, sync_sample
from .vocab import (
    Token,
    Vocabulary,
    detokenize,
    dump_vocabulary,
    generate_vocabulary,
    is_prefix,
    load_vocabulary,
    load_vocabulary_file,
    prefix_matches,
    vocabulary_sha256,
)

__version__ = "0.1.0"
