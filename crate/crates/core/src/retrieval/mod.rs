//! Grounding-document retrieval: web search, page fetching with Web Archive
//! fallback, paragraph extraction and size-bounded chunking.

pub mod chunk;
pub mod fetch;
pub mod html;
pub mod search;

pub use chunk::{chunk_fill_limit, valid_paragraphs, Chunk};
pub use fetch::{FetchError, Fetcher, GroundingDocument};
pub use search::{web_search, SearchError, SearchHit, SearchProvider};
