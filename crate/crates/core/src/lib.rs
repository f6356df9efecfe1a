//! Loss components that push a network toward disentangled representations,
//! together with everything needed to measure whether they worked.
//!
//! The crate is built around a small set of pieces:
//!
//! - [`numerics`]: dense row-major matrices, softmax / KL-divergence /
//!   hinged-KL kernels, and a deflation-based PCA.
//! - [`losses`]: the pairwise margin-hinged KL loss over weight rows
//!   ([`losses::loss_single`]) and over same-label batch activations
//!   ([`losses::loss_multi`]), their unlabeled variant, the DeCov and XCov
//!   comparison penalties, binary cross-entropy and an autoencoder
//!   objective. Every loss returns exact analytic gradients, and
//!   [`losses::reference`] holds the naive double-loop oracle the vectorized
//!   implementations are tested against.
//! - [`network`]: a from-scratch MLP with backpropagation, Adam, a
//!   deterministic mini-batch training loop that injects any auxiliary loss
//!   at a configured layer, and JSON model persistence.
//! - [`clustering`]: seeded k-means++ initialization plus Lloyd iterations
//!   with restarts.
//! - [`metrics`]: contingency tables, mutual information, the exact
//!   hypergeometric expected mutual information, AMI / NMI, and the
//!   argmax-activation histogram used to inspect representations.
//! - [`data`]: synthetic grouped-Gaussian datasets, an IDX image/label
//!   loader, fine-to-group label mappings, deterministic splits and CSV
//!   import/export.
//! - [`gradcheck`]: central-difference helpers used to verify every
//!   analytic gradient in the crate.
//!
//! All computation is in `f64`. Every randomized routine takes an explicit
//! seed and uses a named deterministic generator (ChaCha8), so identical
//! inputs produce identical outputs, bit for bit.

pub mod clustering;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod losses;
pub mod metrics;
pub mod network;
pub mod numerics;

pub use clustering::{assign, kmeans, ClusteringResult, KmeansParams};
pub use data::{apply_grouping, gen_blobs, load_idx, split, GroupMapping, LabeledDataset};
pub use error::{Error, Result};
pub use losses::{
    loss_autoencoder, loss_bce, loss_decov, loss_multi, loss_multi_unlabeled, loss_single,
    loss_xcov, LossKind, LossSpec, LossValueAndGrad,
};
pub use metrics::{
    activation_histogram, ami, contingency, entropy, expected_mi, mutual_information, nmi,
    AmiNormalization, ContingencyTable, NmiNormalization,
};
pub use network::{
    adam_step, backward, embed, forward, init_model, train, Activation, AdamState, ForwardTrace,
    MlpModel, TrainConfig, TrainLog, TrainingView,
};
pub use numerics::{hinged_kl, kl_divergence, pca_project, softmax, DenseMatrix, ProbVector};
