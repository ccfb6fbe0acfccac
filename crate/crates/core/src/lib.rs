//! Infer labor-market skill coverage from course-syllabus text.
//!
//! The pipeline: load a syllabus corpus, segment and filter its text down
//! to learning-content sentences, score each syllabus against a skill
//! taxonomy by max-pooled embedding similarity, aggregate scores into
//! institution-field-year records, map DWA scores to worker abilities with
//! per-ability random forests, and run the validation analytics (RCA,
//! duplicate analysis, sufficiency curves, clustering, communities, KL
//! divergence against employment-weighted labor profiles).
//!
//! Everything downstream of the embedding provider is deterministic:
//! seeded RNG streams, canonical orderings, and pairwise summation make
//! repeated runs byte-identical.

pub mod ability;
pub mod aggregate;
pub mod analytics;
pub mod corpus;
pub mod embed;
pub mod hashing;
pub mod normalize;
pub mod numeric;
pub mod score;
pub mod textnorm;
pub mod textprep;

pub use ability::{AbilityError, AbilityVector, ForestModel, ModelBundle};
pub use aggregate::{AggregateError, AggregateOutput, AggregateRecord, SyllabusMeta};
pub use analytics::AnalyticsError;
pub use corpus::{CorpusError, CorpusFormat, CorpusStats, PhraseList, SyllabusRecord};
pub use embed::{EmbedError, EmbeddingProvider, EmbeddingVector, ProviderConfig, ProviderKind};
pub use normalize::{FosSkillMatrix, NormalizeError, RcaMatrix};
pub use score::{ScoreError, SkillTaxonomy, SkillVector, TaxonomyKind};
pub use textprep::{FilterError, FilterReport, Sentence};
