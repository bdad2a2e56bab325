//! Facial composite construction.
//!
//! Grayscale facial components are stored with descriptive parameters,
//! retrieved by attribute query, placed on a blank face cutting relative to
//! the ear, and blended into it with a 3x3 neighbourhood intensity factor.
//! [`datapath`] holds a bit-accurate integer model of the blending kernel as
//! a streaming hardware pipeline would compute it; [`tuning`] is its
//! floating-point reference.

pub mod assembler;
pub mod catalog;
pub mod datapath;
pub mod image;
pub mod intensity_text;
pub mod pgm;
pub mod session;
pub mod synth;
pub mod tuning;

pub use assembler::{
    build_component_sheet, compute_layout, find_ear_position, overlay_blind, overlay_masked,
    AnchorPoint, AssembleError, ComponentDims, Layout, Placement,
};
pub use catalog::{
    load_catalog, save_catalog, validate_params, Catalog, CatalogError, ComponentKind,
    ComponentRecord, Params, Query,
};
pub use datapath::{
    blend_pixel_int, equivalence_report, run_textfile_flow, stream_tune, DatapathError,
    DatapathTrace, EquivalenceReport,
};
pub use image::{binarize, otsu_threshold, resize_nearest, BinaryMask, GrayImage, Threshold};
pub use intensity_text::{read_intensity_text, write_intensity_text};
pub use pgm::{load_pgm, save_pgm};
pub use session::{Action, Session, SessionError, Stage, Status};
pub use tuning::{
    blend_pixel, neighborhood_sum, seam_contrast, tune_masked, tune_overlay, TuneConfig,
    ZeroCiPolicy,
};
