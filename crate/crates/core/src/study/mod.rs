//! Declarative studies: config files, runners and the bundled-table suite.

pub mod config;
pub mod paper;
pub mod run;

pub use config::{Format, InitKind, NormKind, Reference, Series, StudyConfig, StudyKind};
pub use paper::{check_table, run_paper_tables, Check, SuiteReport, BUNDLED};
pub use run::{
    diagnose_cmd, find_humps, run_convergence_study, run_energy_study, run_projection_study, run_soliton,
    DiagnoseReport, EnergyStudy, Hump, Snapshot, SolitonRun, StudyTable, TableRow,
};
