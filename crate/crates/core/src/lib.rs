pub mod clock;
pub mod dataset;
pub mod evaluation;
pub mod http;
pub mod llm;
pub mod model;
pub mod par;
pub mod prompting;
pub mod report;
pub mod retrieval;
pub mod retry;
pub mod template;
pub mod verifier;
pub mod wikidata;
