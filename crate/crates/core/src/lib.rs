pub mod linalg;
pub mod ring;
pub mod group;
pub mod complex;
pub mod resolution;
pub mod lab;
pub mod perfection;
