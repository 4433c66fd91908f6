//! Brute-force oracle on a finite box: the field is quantized on a momentum
//! grid, the single-excitation sector is diagonalized exactly and the one- and
//! two-excitation sectors are evolved in time.

mod experiment;
mod grid;
mod krylov;
mod oracle;
mod sector;

pub use experiment::{
    detuning_sweep, evolve, prepare_state, relaxation_experiment, run_relaxation, Asymptote, CustomComponent,
    Evolved, InitialState, Propagator, RelaxationSpec, SectorState, SweepResult, SweepRow, Trajectory,
    TrajectoryPoint, REVIVAL_FRACTION,
};
pub use grid::{build_hamiltonian_n1, discretize, DiscretizedModel, GridResonance};
pub use krylov::{propagate, KrylovOptions, KrylovStats};
pub use oracle::{
    analytic_vector, apply_n1, bic_oracle, ladder_residual, parity_block, self_convergence, spectrum_n1,
    OracleReport, ParityBlock, SelfConvergence, CLUSTER_WINDOW,
};
pub use sector::{
    build_sector_basis, build_sector_hamiltonian, Occupation, SectorBasis, SparseHamiltonian, MAX_MODES_N2,
};
