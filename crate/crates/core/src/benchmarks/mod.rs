//! Offline benchmarks and primal-dual certificates.

pub mod certificate;
pub mod configurations;
pub mod opt;

pub use certificate::{
    certificate_csv_row, construct_dual, verify_certificate, CertMode, CertificateReport, DualSolution,
    CERTIFICATE_CSV_HEADER,
};
pub use configurations::{enumerate_configurations, Configuration};
pub use opt::{opt_branch_and_bound, opt_exact, opt_flow};
