//! Aggregate analytics over parsed events.

pub mod categories;
pub mod fingerprint;
pub mod jobs;
pub mod kde;
pub mod temporal;
pub mod ward;

pub use categories::{CategoryRuleError, CategoryRules, OTHER_ID, OTHER_LABEL};
pub use fingerprint::{fingerprint, fingerprint_tsv, severity_distribution, severity_shares, FingerprintRow, FingerprintTable, SeverityShare};
pub use jobs::{expand_nodelist, join_jobs, read_jobs_csv, JobError, JobIndex, JobRecord, JoinedEvent, Overlap};
pub use kde::{kde_density, silverman_bandwidth, DensityGrid, KdeError, WeightedPoint};
pub use temporal::{category_cdf, temporal_histogram, CategoryCdf, Histogram, TemporalError, DEFAULT_WINDOW_SECS};
pub use ward::{ward_cluster, ward_linkage, CategoryDomainMatrix, ClusterError, ClusteredMatrix, Dendrogram, Merge};
