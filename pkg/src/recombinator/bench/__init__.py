from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    ExperimentSummary,
    Stats,
    bootstrap_matched,
    bootstrap_repeated,
    build_simple_pool,
    centroid_density,
    emit_centroid_density,
    emit_histogram,
    format_table,
    load_pool,
    median,
    read_csv,
    resolve_threads,
    run_experiment,
    success_rate,
    write_outputs,
)
