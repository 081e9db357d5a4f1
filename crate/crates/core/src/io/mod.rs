//! File formats: PGM/PPM images, float tensors, kernel text files and
//! `key=value` configuration.

pub mod config;
pub mod kernel_file;
pub mod pnm;
pub mod tensor;

pub use config::Config;
pub use kernel_file::{read_kernel, write_kernel};
pub use pnm::{read_image, write_image};
pub use tensor::{read_image_tensor, write_image_tensor, Tensor};
