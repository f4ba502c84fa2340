//! A complete, criteria-driven dependency solver for CUDF upgrade problems.
//!
//! Problems are read as CUDF documents ([`cudf`]), encoded into clauses over
//! one boolean per package version ([`encoder`]) and solved by a CDCL engine
//! ([`sat`]) under lexicographic user criteria ([`criteria`], [`optimizer`]).
//! Solutions are validated independently ([`checker`]) and, on small
//! instances, compared against exhaustive enumeration ([`oracle`]).

pub mod bench;
pub mod checker;
pub mod cli;
pub mod criteria;
pub mod cudf;
pub mod encoder;
pub mod gen;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod rng;
pub mod sat;
pub mod semver;

pub use criteria::{parse_criteria, CriteriaList, Criterion, Measure, Sense};
pub use cudf::{parse_document, print_document, CudfDocument};
pub use model::{
    build_universe, PackageId, PackageName, PackageStanza, RelOp, Request, Solution, Universe,
    Version, VpkgAtom, VpkgFormula,
};
pub use optimizer::{solve_upgrade, Budget, Outcome};
