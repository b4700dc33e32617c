"""Logic locking with randomized multi-correct-key enhancement and a
learning-based key-prediction attack harness for evaluating it."""

from .netlist import (
    BenchSyntaxError,
    Circuit,
    CircuitStructureError,
    Gate,
    NetlistError,
    check_well_formed,
    gate_count,
    normalize_fanin2,
    parse_bench,
    parse_bench_file,
    rename_ports,
    write_bench,
    write_bench_file,
)
from .sim import (
    evaluate,
    exhaustive_patterns,
    random_patterns,
    simulate,
    truth_table,
)
from .locking import (
    Key,
    KeyVerificationError,
    LockedCircuit,
    LockingError,
    OracleConfig,
    Scheme,
    SchemeParams,
    Verdict,
    VerdictStatus,
    apply_key,
    demote_key_ports,
    is_correct_key,
    lock_sarlock,
    lock_xbi,
)
from .rewrite import rewrite_randomized
from .decor import (
    DecorConfig,
    DecorResult,
    decor_enhance,
    mc_same_feature_given_label,
    mc_same_label_given_feature,
    same_feature_bound,
    same_label_bound,
    same_label_exact,
    sample_correct_key_set,
)
from .attack import (
    AttackError,
    AttackReport,
    FeatureParams,
    FeatureRecord,
    ReferenceParams,
    compute_bkpa,
    compute_kpa,
    extract_feature,
    extract_subgraph,
    extract_vector,
    generate_references,
    predict_key,
    run_attack,
    train_frequency,
    train_mlp,
    vector_length,
)
from .metrics import (
    OverheadRecord,
    PcaProjection,
    RunRecord,
    best_threshold_accuracy,
    emit_report,
    gate_overhead,
    pca_top2,
)
from .circuitgen import GenParams, benchmark_suite, random_circuit
from .keyio import (
    format_key,
    format_key_list,
    parse_key,
    parse_key_list,
    read_key_file,
    read_key_list_file,
    write_key_file,
    write_key_list_file,
)
from .seeds import derive_seed, np_rng_for, rng_for

__version__ = "0.1.0"
