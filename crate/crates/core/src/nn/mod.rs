//! Complex-valued spatio-temporal graph convolutional network.
//!
//! A window `X` (`|V| x T`) goes through a temporal convolution `X Γ`, one
//! multi-feature graph convolution, complex dense layers with CReLU, and either
//! a complex split-tanh head (forecasting) or a real sigmoid head over
//! `[Re h; Im h]` (localization). Gradients are carried as
//! `∂L/∂Re + j ∂L/∂Im` for every complex tensor.

mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use layers::{graph_conv, graph_conv_linear, temporal_conv, LayerGso};
pub use loss::{
    loss_forecast, loss_forecast_grad, loss_localization, loss_localization_grad, PhysicsTerm,
};
pub use model::{
    DenseLayer, ForwardCache, GradientSet, HeadKind, OutputHead, Parameters, Prediction, Scaling,
    StgcnConfig, StgcnModel, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use tensor::{crelu, crelu_matrix, sigmoid, split_tanh, ComplexTensor};
pub use train::{
    mean_loss, sample_loss, sample_loss_and_grad, train, Adam, EpochRecord, LossContext, Sample,
    Target, TrainConfig, TrainOutcome,
};
