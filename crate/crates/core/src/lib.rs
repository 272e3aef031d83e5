pub mod chain;
pub mod linalg;
pub mod unionfind;
pub mod persist;
pub mod phasecode;
pub mod coincide;
pub mod pngsim;
pub mod raster;
pub mod gridplace;
pub mod nav;
pub mod ght;
pub mod cech;
pub mod hopf;
