//! Building blocks for reconstructing a business-text corpus from SEC EDGAR
//! daily dissemination archives and auditing the result.

pub mod audit;
pub mod cleaning;
pub mod corpus_model;
pub mod dedup;
pub mod edgar_client;
pub mod extraction;
pub mod ratelimit;

// Book chapters, compiled so their snippets run under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/archives.md")]
    mod archives {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/cleaning.md")]
    mod cleaning {}
    #[doc = include_str!("../../../book/src/dedup.md")]
    mod dedup {}
    #[doc = include_str!("../../../book/src/audit.md")]
    mod audit {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
