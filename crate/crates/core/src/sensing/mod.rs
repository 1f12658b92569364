//! Sensor placement, state recovery from partial phasor readings, and
//! stealthy false-data injection.

mod attack;
mod dataset;
mod placement;
mod recovery;

pub use attack::{
    attack_null_space, choose_attack_set, has_full_support, make_labels, stealthy_attack,
    AttackInstance, NULL_RTOL,
};
pub use dataset::{
    build_dataset, AttackMode, AttackParams, Dataset, DatasetSample, DatasetSpec, Hypothesis,
};
pub use placement::{greedy_sensor_placement, placement_score, SensorPlan};
pub use recovery::{rls_recover, zero_fill, RlsOperator, RLS_RCOND};
