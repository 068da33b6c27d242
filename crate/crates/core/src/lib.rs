pub mod demo;
pub mod extractor;
pub mod glosser;
pub mod lattice;
pub mod ngram;
pub mod postedit;
pub mod prefsem;
pub mod sexpr;
pub mod skipparse;
pub mod translit;
