"""Few-shot classification via diversity-transfer feature generation.

Thin wrapper over the C++ core: synthetic data, episode schedules, training
and episodic evaluation. The kwargs of train()/evaluate_checkpoint() mirror
the CLI config-file keys (seed, n_way, k_shot, queries, h_gen, schedule, ...).
"""

from ._core import (
    ConfigError,
    Dataset,
    FormatError,
    __version__,
    at_schedule,
    evaluate_checkpoint,
    gen_synthetic,
    l2_normalize,
    leaky_relu,
    load_embeddings,
    naive_schedule,
    oat_schedule,
    save_embeddings,
    split_by_counts,
    train,
    two_stage_schedule,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "FormatError",
    "__version__",
    "at_schedule",
    "evaluate_checkpoint",
    "gen_synthetic",
    "l2_normalize",
    "leaky_relu",
    "load_embeddings",
    "naive_schedule",
    "oat_schedule",
    "save_embeddings",
    "split_by_counts",
    "train",
    "two_stage_schedule",
]
