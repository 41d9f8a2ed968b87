//! Segmentation agreement and slice morphometry from binary masks.

mod edt;
mod morphometry;
mod overlap;
mod segment;

pub use edt::squared_distance_to;
pub use morphometry::{
    cortical_thickness, mean_bmd, morpho_report, otsu_threshold, trabecular_number,
    trabecular_number_axes, Calibration, MorphoReport, TbNAxes,
};
pub use overlap::{boundary, dice, hausdorff, jaccard, seg_report, SegReport};
pub use segment::{connected_components, fill_holes, threshold_segment};
