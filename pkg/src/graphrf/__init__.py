"""Scalable online (multi-)kernel learning of node signals over graphs.

Nodes are represented by their connectivity patterns, encoded through frozen
random-feature maps of shift-invariant kernels; constant-step online gradient
descent trains one learner per kernel and hedge weights combine them.  Batch
kernel-ridge and k-NN baselines plus a benchmark harness round out the
package.
"""

from ._accel import NUMBA_ENABLED
from .graph import (
    ConnectivityPattern,
    Graph,
    GraphSignal,
    SamplingPlan,
    connectivity_pattern,
    erdos_renyi,
    load_edge_list,
    load_labels,
    normalized_laplacian,
    power_adjacency,
    sample_nodes,
    synth_signal,
)
from .kernels import (
    GraphKernelSpec,
    KernelSpec,
    eval_kernel,
    eval_kernel_matrix,
    graph_kernel_matrix,
    spectral_sample,
)
from .features import (
    RFMap,
    approx_kernel,
    build_map,
    encode,
    load_map,
    null_space_collision,
    save_map,
)
from .online import (
    LossKind,
    SingleKernelState,
    absorb_new_node,
    init_state,
    load_checkpoint,
    loss_grad,
    loss_value,
    ogd_step,
    predict,
    predict_batch,
    save_checkpoint,
    train_stream,
)
from .mkl import (
    EnsembleModel,
    FeatureProvider,
    MklModel,
    MklTraces,
    RegretReport,
    connectivity_provider,
    ensemble_combine,
    ensemble_predict,
    ensemble_train,
    ensemble_update,
    load_mkl_checkpoint,
    matrix_provider,
    mkl_init,
    mkl_predict,
    mkl_predict_batch,
    mkl_train,
    mkl_update,
    power_provider,
    save_mkl_checkpoint,
    static_regret,
    traces_to_tsv,
)
from .baselines import (
    BatchKernelModel,
    KnnInapplicableError,
    batch_kernel_ridge,
    batch_predict,
    batch_rf_ls,
    knn_predict,
)
from .harness import (
    ExperimentConfig,
    Report,
    bench_newnode,
    conventional_nmse,
    load_config,
    nmse,
    run_dataset,
    run_regret,
    run_synthetic,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
