//! DOTA label files, tiling plans with coordinate remapping, and oriented
//! submission files. Only coordinates are handled; no pixels are read.

mod dota;
mod task1;
mod tiling;

pub use dota::{dota_category_id, parse_dota, write_dota, DotaAnnotation, DotaObject, DOTA_CATEGORIES};
pub use task1::{
    format_task1_line, parse_task1, read_task1_dir, task1_file_name, write_task1, write_task1_dir, Task1Record,
};
pub use tiling::{
    box_to_image, clip_to_window, merge_tile_detections, quad_to_image, remap_all, remap_gt_to_tile, tile_plan,
    TilePlan, TileWindow, DEFAULT_MIN_INSIDE_FRAC, DEFAULT_OUT, DEFAULT_OVERLAP, DEFAULT_TILE,
};
