//! Exact samplers for the scaled Lévy process, its big-jump decomposition,
//! and the scaled random walks.

mod config;
mod coupling;
mod levy;
mod walk;

pub use config::{moments, tail_moments, LevyConfig, MomentCache, PowerSmallJumps, SMALL_JUMP_CUTOFF};
pub use coupling::{sample_gamma_uniform, sample_k_jump_sizes, JumpVector, PoissonDraw};
pub use levy::{
    sample_diffusion, sample_r_bar, sample_x_bar, sample_x_bar_with_prefix, sample_y_bar_split, Components,
    LevySample, DEFAULT_RESOLUTION, MIN_RESOLUTION,
};
pub use walk::{
    sample_coupled_walks, sample_k_jump_sizes_rw, sample_s_bar, sample_w_bar, uniform_order_statistics, CoupledWalks,
};
