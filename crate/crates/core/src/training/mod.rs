//! Episode-range splits, transition iteration and the behavioral-cloning learner.

mod bc;
mod checkpoint;
mod split;

pub use bc::{
    policy_act_greedy, train_bc, BcModel, BcPolicy, Gradients, Head, Sample, Target, TrainConfig, TrainOutcome,
    DEFAULT_HIDDEN,
};
pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint, write_loss_csv, ILBC_MAGIC,
    ILBC_VERSION,
};
pub use split::{split_range, transitions, ActionRef, Split, SplitSpec, TransitionView};
