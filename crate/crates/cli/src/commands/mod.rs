pub mod compare;
pub mod eval;
pub mod headroom;
pub mod histogram;
pub mod oracle;
pub mod reorder;
